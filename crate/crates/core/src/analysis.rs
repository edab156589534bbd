//! Rate bounds from the edge-density growth rate, and per-`n` rate tables.

use std::io::Write;

use num_bigint::BigUint;
use num_traits::One;
use serde::{Serialize, Serializer};

use crate::error::{Error, Result};
use crate::pairgraph::{self, count_pairs, log2_big};
use crate::subdp::{rate_from_subdp, subdp_exact, subdp_heuristic, EXACT_SUBDP_CAP};
use crate::tfgraph::{build_graph_with_cap, min_degree_with_cap, DEFAULT_GRAPH_CAP};
use crate::word::ForbiddenPair;

/// `log2((1+sqrt 5)/2)`: growth of the minimum degree of `G(10,01,n)`, which
/// caps both stateless coding and codes built from a domatic partition of
/// the whole graph.
pub fn stateless_ceiling() -> f64 {
    ((1.0 + 5f64.sqrt()) / 2.0).log2()
}

/// Closed-form lower bound for `(10,01)`: `-2 + log2(3 + sqrt 17)`.
pub fn ftc_lower_bound() -> f64 {
    -2.0 + (3.0 + 17f64.sqrt()).log2()
}

/// Closed-form upper bound for `(10,01)`: `(-1 + log2(3 + sqrt 17)) / 2`.
pub fn ftc_upper_bound() -> f64 {
    (-1.0 + (3.0 + 17f64.sqrt()).log2()) / 2.0
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct RateBounds {
    pub alpha: f64,
    pub lower: f64,
    pub upper: f64,
    pub comparison_stateless: f64,
}

/// Asymptotic rate bounds `alpha <= R <= (1 + alpha) / 2`.
///
/// Only meaningful for a positive growth rate.
pub fn rate_bounds(alpha: f64) -> Result<RateBounds> {
    if alpha.is_nan() || alpha <= 0.0 {
        return Err(Error::OutOfDomain(format!(
            "the bounds need a positive edge-density growth rate, got alpha = {alpha}"
        )));
    }
    Ok(RateBounds {
        alpha,
        lower: alpha,
        upper: (1.0 + alpha) / 2.0,
        comparison_stateless: stateless_ceiling(),
    })
}

/// A table entry, or the cap that prevented computing it.
#[derive(Clone, Debug, PartialEq)]
pub enum Cell<T> {
    Value(T),
    Limit(String),
}

impl<T> Cell<T> {
    pub fn value(&self) -> Option<&T> {
        match self {
            Cell::Value(v) => Some(v),
            Cell::Limit(_) => None,
        }
    }

    fn from_result(r: Result<T>) -> Result<Self> {
        match r {
            Ok(v) => Ok(Cell::Value(v)),
            Err(Error::ResourceLimit { what, cap, .. }) => {
                Ok(Cell::Limit(format!("{what} exceeds cap {cap}")))
            }
            Err(e) => Err(e),
        }
    }
}

impl<T: Serialize> Serialize for Cell<T> {
    fn serialize<S: Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        match self {
            Cell::Value(v) => v.serialize(s),
            Cell::Limit(why) => {
                use serde::ser::SerializeMap;
                let mut m = s.serialize_map(Some(1))?;
                m.serialize_entry("limit", why)?;
                m.end()
            }
        }
    }
}

impl<T: ToString> Cell<T> {
    fn csv(&self) -> String {
        match self {
            Cell::Value(v) => v.to_string(),
            Cell::Limit(_) => "NA".to_string(),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct RateRow {
    pub n: usize,
    /// `N(p,q,n)` as a decimal string.
    pub pairs: String,
    pub edges: String,
    pub density: f64,
    /// Finite-`n` estimate `(1/n) log2 density`.
    pub alpha_n: f64,
    pub min_degree: Cell<String>,
    pub subdp: Cell<usize>,
    pub exact: Option<bool>,
    pub rate: Cell<f64>,
    pub lower: Option<f64>,
    pub upper: Option<f64>,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct RateTable {
    pub p: String,
    pub q: String,
    pub alpha: f64,
    pub bounds: Option<RateBounds>,
    pub stateless_ceiling: f64,
    pub rows: Vec<RateRow>,
}

#[derive(Clone, Copy, Debug)]
pub struct TableOptions {
    pub tol: f64,
    pub seed: u64,
    pub graph_cap: usize,
    pub min_degree_cap: usize,
    pub max_iter: usize,
}

impl Default for TableOptions {
    fn default() -> Self {
        TableOptions {
            tol: pairgraph::DEFAULT_TOL,
            seed: 1,
            graph_cap: DEFAULT_GRAPH_CAP,
            min_degree_cap: 2 * DEFAULT_GRAPH_CAP,
            max_iter: pairgraph::MAX_POWER_ITERATIONS,
        }
    }
}

pub fn rate_table(
    fp: &ForbiddenPair,
    n_values: &[usize],
    opts: &TableOptions,
) -> Result<RateTable> {
    let m = pairgraph::build_pair_graph(fp)?;
    let alpha = (pairgraph::spectral_radius_with_cap(&m, opts.tol, opts.max_iter)? / 2.0).log2();
    let bounds = rate_bounds(alpha).ok();
    let rows = n_values
        .iter()
        .map(|&n| rate_row(fp, n, bounds.as_ref(), opts))
        .collect::<Result<Vec<_>>>()?;
    Ok(RateTable {
        p: fp.p().to_string(),
        q: fp.q().to_string(),
        alpha,
        bounds,
        stateless_ceiling: stateless_ceiling(),
        rows,
    })
}

fn rate_row(
    fp: &ForbiddenPair,
    n: usize,
    bounds: Option<&RateBounds>,
    opts: &TableOptions,
) -> Result<RateRow> {
    let pairs = count_pairs(fp, n)?;
    let diagonal = BigUint::one() << n;
    let edges: BigUint = (&pairs - &diagonal) / 2u32;
    let log_edges = if edges == BigUint::from(0u32) {
        f64::NEG_INFINITY
    } else {
        log2_big(&edges)
    };
    let log_density = log_edges - n as f64;

    let min_degree =
        Cell::from_result(min_degree_with_cap(fp, n, opts.min_degree_cap).map(|d| d.to_string()))?;

    let solved = match build_graph_with_cap(fp, n, opts.graph_cap) {
        Ok(tfg) => {
            let r = if tfg.graph().vertex_count() <= EXACT_SUBDP_CAP {
                subdp_exact(tfg.graph())?
            } else {
                subdp_heuristic(tfg.graph(), None, opts.seed)?
            };
            Some(r)
        }
        Err(Error::ResourceLimit { .. }) => None,
        Err(e) => return Err(e),
    };
    let limit = || format!("explicit graph with n = {n} exceeds cap {}", opts.graph_cap);
    let (subdp, exact, rate) = match &solved {
        Some(r) => (
            Cell::Value(r.value),
            Some(r.exact),
            Cell::Value(rate_from_subdp(r, n)),
        ),
        None => (Cell::Limit(limit()), None, Cell::Limit(limit())),
    };
    Ok(RateRow {
        n,
        pairs: pairs.to_string(),
        edges: edges.to_string(),
        density: log_density.exp2(),
        alpha_n: log_density / n as f64,
        min_degree,
        subdp,
        exact,
        rate,
        lower: bounds.map(|b| b.lower),
        upper: bounds.map(|b| b.upper),
    })
}

fn opt_csv(v: Option<impl ToString>) -> String {
    v.map(|x| x.to_string()).unwrap_or_else(|| "NA".into())
}

impl RateTable {
    /// One header row, then one row per `n`. Capped cells read `NA`.
    pub fn write_csv<W: Write>(&self, out: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(out);
        let io = |e: csv::Error| Error::invalid(format!("csv output failed: {e}"));
        w.write_record([
            "n",
            "pairs",
            "edges",
            "density",
            "alpha_n",
            "min_degree",
            "subdp",
            "exact",
            "rate",
            "lower",
            "upper",
        ])
        .map_err(io)?;
        for r in &self.rows {
            w.write_record([
                r.n.to_string(),
                r.pairs.clone(),
                r.edges.clone(),
                r.density.to_string(),
                r.alpha_n.to_string(),
                r.min_degree.csv(),
                r.subdp.csv(),
                opt_csv(r.exact),
                r.rate.csv(),
                opt_csv(r.lower),
                opt_csv(r.upper),
            ])
            .map_err(io)?;
        }
        w.flush()
            .map_err(|e| Error::invalid(format!("csv output failed: {e}")))?;
        Ok(())
    }

    /// `n,rate,lower,upper` rows for plotting achieved rates against the bounds.
    pub fn write_plot_csv<W: Write>(&self, out: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(out);
        let io = |e: csv::Error| Error::invalid(format!("csv output failed: {e}"));
        w.write_record(["n", "rate", "lower", "upper"])
            .map_err(io)?;
        for r in &self.rows {
            w.write_record([
                r.n.to_string(),
                r.rate.csv(),
                opt_csv(r.lower),
                opt_csv(r.upper),
            ])
            .map_err(io)?;
        }
        w.flush()
            .map_err(|e| Error::invalid(format!("csv output failed: {e}")))?;
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn near(x: f64, y: f64) -> bool {
        (x - y).abs() < 1e-4
    }

    #[test]
    fn bounds_examples() {
        let b = rate_bounds(ftc_lower_bound()).unwrap();
        assert!(near(b.lower, 0.8325) && near(b.upper, 0.9162));
        let one = rate_bounds(1.0).unwrap();
        assert_eq!((one.lower, one.upper), (1.0, 1.0));
        let foc = rate_bounds(0.9636).unwrap();
        assert!(near(foc.lower, 0.9636) && near(foc.upper, 0.9818));
        assert!(matches!(rate_bounds(0.0), Err(Error::OutOfDomain(_))));
        assert!(rate_bounds(-0.5).is_err());
        assert!(rate_bounds(f64::NAN).is_err());
    }

    #[test]
    fn closed_forms() {
        assert!((stateless_ceiling() - 0.6942).abs() < 1e-4);
        assert!((ftc_upper_bound() - (1.0 + ftc_lower_bound()) / 2.0).abs() < 1e-15);
        assert!((ftc_upper_bound() - 0.9162).abs() < 1e-4);
    }

    #[test]
    fn bounds_are_monotone() {
        let mut prev = rate_bounds(0.01).unwrap();
        for i in 2..=100 {
            let b = rate_bounds(i as f64 / 100.0).unwrap();
            assert!(b.lower > prev.lower && b.upper > prev.upper);
            prev = b;
        }
    }

    #[test]
    fn table_rows() {
        let t = rate_table(&ForbiddenPair::ftc(), &[1, 2, 3], &TableOptions::default()).unwrap();
        let r1 = &t.rows[0];
        assert_eq!((r1.pairs.as_str(), r1.edges.as_str()), ("4", "1"));
        assert_eq!(r1.subdp, Cell::Value(2));
        assert_eq!(r1.rate, Cell::Value(1.0));
        let r2 = &t.rows[1];
        assert_eq!((r2.pairs.as_str(), r2.edges.as_str()), ("14", "5"));
        assert_eq!(r2.subdp, Cell::Value(3));
        assert_eq!(r2.exact, Some(true));
        assert!((r2.rate.value().unwrap() - 0.7925).abs() < 1e-4);
        assert_eq!(r2.min_degree, Cell::Value("2".to_string()));

        let foc = rate_table(&ForbiddenPair::foc(), &[2], &TableOptions::default()).unwrap();
        let r = &foc.rows[0];
        assert_eq!((r.pairs.as_str(), r.edges.as_str()), ("16", "6"));
        assert_eq!(
            (r.subdp.clone(), r.rate.clone()),
            (Cell::Value(4), Cell::Value(1.0))
        );
    }

    #[test]
    fn capped_cells() {
        let opts = TableOptions {
            graph_cap: 3,
            min_degree_cap: 3,
            ..TableOptions::default()
        };
        let t = rate_table(&ForbiddenPair::ftc(), &[4], &opts).unwrap();
        assert!(matches!(t.rows[0].subdp, Cell::Limit(_)));
        assert!(matches!(t.rows[0].min_degree, Cell::Limit(_)));
        let mut buf = Vec::new();
        t.write_csv(&mut buf).unwrap();
        let text = String::from_utf8(buf).unwrap();
        assert!(text.lines().nth(1).unwrap().contains("NA"));
        let json = serde_json::to_string(&t).unwrap();
        assert!(json.contains("\"limit\""));
    }

    #[test]
    fn finite_alpha_converges() {
        let fp = ForbiddenPair::ftc();
        let opts = TableOptions {
            graph_cap: 0,
            min_degree_cap: 0,
            ..TableOptions::default()
        };
        let ns: Vec<usize> = (4..=64).step_by(4).collect();
        let t = rate_table(&fp, &ns, &opts).unwrap();
        for r in &t.rows {
            assert!(
                (r.alpha_n - t.alpha).abs() < 2.0 / r.n as f64,
                "n={} {}",
                r.n,
                r.alpha_n
            );
        }
    }

    #[test]
    fn csv_layout() {
        let t = rate_table(&ForbiddenPair::ftc(), &[2], &TableOptions::default()).unwrap();
        let mut buf = Vec::new();
        t.write_plot_csv(&mut buf).unwrap();
        let text = String::from_utf8(buf).unwrap();
        let mut lines = text.lines();
        assert_eq!(lines.next(), Some("n,rate,lower,upper"));
        assert!(lines.next().unwrap().starts_with("2,0.792"));
    }
}
