//! Parameter sweeps behind the `noise`, `rate-finite` and `rate-asymptotic`
//! subcommands.

use rayon::prelude::*;

use super::config::ChainConfigFile;
use super::table::{Cell, Table};
use crate::error::{out_of_range, Error, Result};
use crate::keyrate::{
    asymptotic_rate, bb84_asymptotic, bb84_finite_with_ec, finite_rate, noise_tolerance, LeakModel,
    RateParams,
};
use crate::noise::{link_q_for_observed, noise_parameter, observed_qx, uniform_noise_parameter, ChainSpec};

/// Honest counts plotted when nothing else is requested.
pub const PRESET_HONEST: [usize; 3] = [0, 2, 4];
pub const PRESET_NOISE_HONEST: [usize; 4] = [1, 2, 3, 4];
pub const PRESET_REPEATERS: usize = 5;
pub const PRESET_Q: f64 = 0.03;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RateOptions {
    pub epsilon: f64,
    pub m_fraction: f64,
    pub ec_factor: f64,
    pub leak: LeakModel,
}

impl RateOptions {
    fn params(&self, rounds: u64, p_star: f64) -> Result<RateParams> {
        Ok(RateParams::with_fraction(rounds, self.m_fraction, self.epsilon, self.ec_factor, p_star)?
            .with_leak(self.leak))
    }
}

/// One rate curve: a trust split over the configured links.
#[derive(Debug, Clone, PartialEq)]
pub struct Curve {
    pub label: String,
    pub spec: ChainSpec,
    pub p_star_override: Option<f64>,
    /// Set when every link is depolarizing with one shared `q`, which lets
    /// observed-noise sweeps recompute `p*` from the implied link noise.
    pub uniform_q: Option<f64>,
}

impl Curve {
    pub fn p_star(&self) -> f64 {
        self.p_star_override
            .unwrap_or_else(|| noise_parameter(&self.spec))
    }

    /// `p*` when the chain is re-tuned so that its observed error is `qx`.
    pub fn p_star_at(&self, qx: f64) -> Result<f64> {
        if let Some(p) = self.p_star_override {
            return Ok(p);
        }
        if self.uniform_q.is_none() {
            return Ok(noise_parameter(&self.spec));
        }
        let q = link_q_for_observed(qx, self.spec.links().len())?;
        uniform_noise_parameter(q, self.spec.honest())
    }
}

/// Curves for rate sweeps.
///
/// An explicit honest list gives balanced splits over the configured links.
/// Otherwise a loaded config is one curve with its own split and override,
/// and the built-in preset is the honest counts {0, 2, 4}.
pub fn build_curves(cfg: &ChainConfigFile, from_file: bool, honest: Option<&[usize]>) -> Result<Vec<Curve>> {
    let uniform_q = cfg.uniform_q();
    let links = cfg.link_noise()?;
    let balanced = |h: usize| -> Result<Curve> {
        Ok(Curve {
            label: format!("h{h}"),
            spec: ChainSpec::balanced(cfg.repeaters, h, &links)?,
            p_star_override: None,
            uniform_q,
        })
    };
    match (honest, from_file) {
        (Some(list), _) => list.iter().map(|&h| balanced(h)).collect(),
        (None, true) => {
            let spec = cfg.chain()?;
            Ok(vec![Curve {
                label: format!("h{}", spec.honest()),
                spec,
                p_star_override: cfg.p_star_override,
                uniform_q,
            }])
        }
        (None, false) => PRESET_HONEST.iter().map(|&h| balanced(h)).collect(),
    }
}

/// Sweep axis: an inclusive range or explicit values.
#[derive(Debug, Clone, PartialEq)]
pub enum Axis {
    Range { from: f64, to: f64, steps: usize },
    Values(Vec<f64>),
}

impl Axis {
    /// Grid points, log-spaced when `log` is set.
    pub fn points(&self, log: bool) -> Result<Vec<f64>> {
        match self {
            Axis::Values(v) if v.is_empty() => Err(Error::Config("empty value list".into())),
            Axis::Values(v) => Ok(v.clone()),
            Axis::Range { steps: 0, .. } => Err(out_of_range("steps", 0.0, "must be positive")),
            Axis::Range { from, to, .. } if to < from => {
                Err(out_of_range("to", *to, "must not be below `from`"))
            }
            Axis::Range { from, to, steps } => {
                if log && *from <= 0.0 {
                    return Err(out_of_range("from", *from, "log axis needs a positive start"));
                }
                if *steps == 1 {
                    return Ok(vec![*from]);
                }
                let (a, b) = if log { (from.log10(), to.log10()) } else { (*from, *to) };
                Ok((0..*steps)
                    .map(|i| {
                        let t = a + (b - a) * i as f64 / (*steps - 1) as f64;
                        if log { 10f64.powf(t) } else { t }
                    })
                    .collect())
            }
        }
    }
}

/// Observed noise and `p*` per honest count as the link noise `q` varies.
pub fn cmd_noise(cfg: &ChainConfigFile, honest: &[usize], qs: &[f64]) -> Result<Table> {
    let c = cfg.repeaters;
    if let Some(h) = honest.iter().find(|&&h| h > c) {
        return Err(Error::InvalidChain(format!("{h} honest repeaters exceed {c}")));
    }
    let mut header = vec!["q".to_string(), "qx_total".to_string()];
    header.extend(honest.iter().map(|h| format!("p_star_h{h}")));
    let mut table = Table::new(header);
    let rows = qs
        .par_iter()
        .map(|&q| -> Result<Vec<Cell>> {
            let mut row = vec![Cell::Num(q), Cell::Num(observed_qx(&ChainSpec::uniform(c, 0, 0, q)?))];
            for &h in honest {
                let spec = ChainSpec::uniform(c, h.div_ceil(2), h / 2, q)?;
                row.push(Cell::Num(noise_parameter(&spec)));
            }
            Ok(row)
        })
        .collect::<Result<Vec<_>>>()?;
    rows.into_iter().for_each(|r| table.push(r));
    Ok(table)
}

fn rate_header(first: &[&str], curves: &[Curve], clamped: bool, baseline: &str) -> Vec<String> {
    let mut header: Vec<String> = first.iter().map(|s| s.to_string()).collect();
    for c in curves {
        header.push(format!("rate_{}", c.label));
        if clamped {
            header.push(format!("rate_{}_clamped", c.label));
        }
    }
    header.push(format!("rate_{baseline}"));
    if clamped {
        header.push(format!("rate_{baseline}_clamped"));
    }
    header
}

fn push_rate(row: &mut Vec<Cell>, rate: f64, clamped: bool) {
    row.push(Cell::Num(rate));
    if clamped {
        row.push(Cell::Num(rate.max(0.0)));
    }
}

/// Finite-key rate against the number of signals `N`, at the chain's own
/// observed noise.
pub fn cmd_rate_finite_n(cfg: &ChainConfigFile, curves: &[Curve], rounds: &[u64], opts: &RateOptions) -> Result<Table> {
    let qx = observed_qx(&cfg.chain()?);
    let mut table = Table::new(rate_header(&["n", "m", "qx"], curves, true, "bb84f"));
    let rows = rounds
        .par_iter()
        .map(|&n| -> Result<Vec<Cell>> {
            let base = opts.params(n, 0.0)?;
            let m = base.sample();
            let mut row = vec![Cell::Int(n), Cell::Int(m), Cell::Num(qx)];
            for c in curves {
                let r = finite_rate(qx, &opts.params(n, c.p_star())?)?;
                push_rate(&mut row, r.rate, true);
            }
            push_rate(&mut row, bb84_finite_with_ec(qx, n, m, opts.epsilon, opts.ec_factor)?, true);
            Ok(row)
        })
        .collect::<Result<Vec<_>>>()?;
    rows.into_iter().for_each(|r| table.push(r));
    Ok(table)
}

// A re-tuned chain reaches p* = 1/2 only at qx = 1/2, where no curve is
// positive; bisection may probe that endpoint.
fn bisection_rate(rate: Result<f64>) -> Result<f64> {
    match rate {
        Err(Error::OutOfRange { name: "p_star", .. }) => Ok(f64::NEG_INFINITY),
        other => other,
    }
}

fn threshold_row(curve_fns: Vec<Box<dyn Fn(f64) -> Result<f64> + Sync + '_>>, pad: usize, clamped: bool) -> Result<Vec<Cell>> {
    let mut row = vec![Cell::Text("threshold".into())];
    row.extend((0..pad).map(|_| Cell::Text(String::new())));
    for f in curve_fns {
        let t = noise_tolerance(f)?.value();
        row.push(Cell::Num(t));
        if clamped {
            row.push(Cell::Num(t));
        }
    }
    Ok(row)
}

/// Finite-key rate against observed noise at fixed `N`, with a trailing
/// `threshold` row holding each curve's zero crossing.
pub fn cmd_rate_finite_qx(curves: &[Curve], qxs: &[f64], rounds: u64, opts: &RateOptions) -> Result<Table> {
    let m = opts.params(rounds, 0.0)?.sample();
    let mut table = Table::new(rate_header(&["qx"], curves, true, "bb84f"));
    let rate_at = |c: &Curve, qx: f64| -> Result<f64> {
        Ok(finite_rate(qx, &opts.params(rounds, c.p_star_at(qx)?)?)?.rate)
    };
    let bb84 = |qx: f64| bb84_finite_with_ec(qx, rounds, m, opts.epsilon, opts.ec_factor);
    let rows = qxs
        .par_iter()
        .map(|&qx| -> Result<Vec<Cell>> {
            let mut row = vec![Cell::Num(qx)];
            for c in curves {
                push_rate(&mut row, rate_at(c, qx)?, true);
            }
            push_rate(&mut row, bb84(qx)?, true);
            Ok(row)
        })
        .collect::<Result<Vec<_>>>()?;
    rows.into_iter().for_each(|r| table.push(r));

    let mut fns: Vec<Box<dyn Fn(f64) -> Result<f64> + Sync + '_>> = curves
        .iter()
        .map(|c| Box::new(move |qx| bisection_rate(rate_at(c, qx))) as Box<dyn Fn(f64) -> Result<f64> + Sync>)
        .collect();
    fns.push(Box::new(bb84));
    table.push(threshold_row(fns, 0, true)?);
    Ok(table)
}

/// Asymptotic rate against observed noise, with a trailing `threshold` row.
pub fn cmd_rate_asymptotic(curves: &[Curve], qxs: &[f64]) -> Result<Table> {
    let mut table = Table::new(rate_header(&["qx"], curves, false, "bb84a"));
    let rate_at = |c: &Curve, qx: f64| -> Result<f64> { asymptotic_rate(qx, c.p_star_at(qx)?) };
    let rows = qxs
        .par_iter()
        .map(|&qx| -> Result<Vec<Cell>> {
            let mut row = vec![Cell::Num(qx)];
            for c in curves {
                row.push(Cell::Num(rate_at(c, qx)?));
            }
            row.push(Cell::Num(bb84_asymptotic(qx)?));
            Ok(row)
        })
        .collect::<Result<Vec<_>>>()?;
    rows.into_iter().for_each(|r| table.push(r));

    let mut fns: Vec<Box<dyn Fn(f64) -> Result<f64> + Sync + '_>> = curves
        .iter()
        .map(|c| Box::new(move |qx| bisection_rate(rate_at(c, qx))) as Box<dyn Fn(f64) -> Result<f64> + Sync>)
        .collect();
    fns.push(Box::new(bb84_asymptotic));
    table.push(threshold_row(fns, 0, false)?);
    Ok(table)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn opts() -> RateOptions {
        RateOptions {
            epsilon: 1e-36,
            m_fraction: 0.07,
            ec_factor: 1.2,
            leak: LeakModel::KeyRounds,
        }
    }

    fn num(c: &Cell) -> f64 {
        match c {
            Cell::Num(v) => *v,
            Cell::Int(v) => *v as f64,
            Cell::Text(t) => panic!("text cell {t}"),
        }
    }

    fn preset() -> ChainConfigFile {
        ChainConfigFile::preset(PRESET_REPEATERS, PRESET_Q)
    }

    #[test]
    fn axis_points() {
        let lin = Axis::Range { from: 0.0, to: 0.5, steps: 6 }.points(false).unwrap();
        assert_eq!(lin.len(), 6);
        assert!((lin[5] - 0.5).abs() < 1e-15);
        let log = Axis::Range { from: 1e5, to: 1e10, steps: 6 }.points(true).unwrap();
        assert!((log[1] - 1e6).abs() < 1e-3);
        assert!(Axis::Range { from: 1.0, to: 0.0, steps: 3 }.points(false).is_err());
        assert!(Axis::Range { from: 0.0, to: 1.0, steps: 0 }.points(false).is_err());
        assert!(Axis::Values(vec![]).points(false).is_err());
    }

    #[test]
    fn noise_table() {
        let qs: Vec<f64> = (0..=50).map(|i| i as f64 * 0.01).collect();
        let t = cmd_noise(&preset(), &PRESET_NOISE_HONEST, &qs).unwrap();
        assert_eq!(t.header, ["q", "qx_total", "p_star_h1", "p_star_h2", "p_star_h3", "p_star_h4"]);
        assert!(t.rows[0][1..].iter().all(|c| num(c) == 0.0));
        let row = &t.rows[3];
        assert!((num(&row[1]) - 0.0835139975355).abs() < 1e-12);
        assert!((num(&row[5]) - 0.057353595).abs() < 1e-12);
        for col in 1..t.header.len() {
            for w in t.rows.windows(2) {
                assert!(num(&w[1][col]) >= num(&w[0][col]));
            }
        }
        assert!(cmd_noise(&preset(), &[6], &qs).is_err());
    }

    #[test]
    fn curves_from_sources() {
        let cfg = preset();
        let curves = build_curves(&cfg, false, None).unwrap();
        assert_eq!(curves.iter().map(|c| c.label.as_str()).collect::<Vec<_>>(), ["h0", "h2", "h4"]);
        let mut file = cfg.clone();
        file.honest_left = 1;
        file.p_star_override = Some(0.01);
        let curves = build_curves(&file, true, None).unwrap();
        assert_eq!(curves.len(), 1);
        assert_eq!(curves[0].p_star(), 0.01);
        assert_eq!(curves[0].p_star_at(0.2).unwrap(), 0.01);
        let curves = build_curves(&file, true, Some(&[3])).unwrap();
        assert_eq!((curves[0].spec.honest_left(), curves[0].spec.honest_right()), (2, 1));
    }

    #[test]
    fn qx_sweep_reproduces_chain_p_star() {
        let curves = build_curves(&preset(), false, None).unwrap();
        let qx = 0.0835139975355;
        for c in &curves {
            assert!((c.p_star_at(qx).unwrap() - c.p_star()).abs() < 1e-12);
        }
    }

    #[test]
    fn asymptotic_table_zero_honest_is_bb84() {
        let curves = build_curves(&preset(), false, None).unwrap();
        let qxs: Vec<f64> = (0..=30).map(|i| i as f64 * 0.01).collect();
        let t = cmd_rate_asymptotic(&curves, &qxs).unwrap();
        let (h0, bb) = (t.column("rate_h0").unwrap(), t.column("rate_bb84a").unwrap());
        for row in &t.rows {
            assert_eq!(num(&row[h0]), num(&row[bb]));
        }
        assert!(t.rows[0][1..].iter().all(|c| num(c) == 1.0));
    }

    #[test]
    fn finite_table_layout() {
        let curves = build_curves(&preset(), false, None).unwrap();
        let t = cmd_rate_finite_n(&preset(), &curves, &[1000, 100_000_000], &opts()).unwrap();
        assert_eq!(t.header[..4], ["n", "m", "qx", "rate_h0"]);
        assert_eq!(num(&t.rows[0][1]), 70.0);
        let h0 = t.column("rate_h0").unwrap();
        assert!(num(&t.rows[0][h0]) < 0.0);
        assert_eq!(num(&t.rows[0][h0 + 1]), 0.0);
    }
}
