//! Convergence studies over a refinement ladder.

use std::fmt::Write as _;
use std::str::FromStr;
use std::time::Instant;

use crate::cases::CaseSpec;
use crate::error::{Error, Result};
use crate::mesh::{build_uniform_mesh, BoundaryConfig, Mesh};
use crate::norms::{ErrorReport, NormContext};
use crate::system::{assemble, solve, ProblemData, SaddleSystem, SolveDiagnostics};

/// Errors below this are rounding noise; no order is computed from them.
pub const ORDER_FLOOR: f64 = 1e-12;

pub const DEFAULT_LEVELS: [usize; 6] = [1, 2, 4, 8, 16, 32];

pub const CSV_HEADER: &str =
    "case,k,n,h,l2_e0,order_l2,h1_e0,order_h1,resid_u,order_resid,resid_lambda,stab_u,wall_ms";

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Format {
    Csv,
    Markdown,
}

impl FromStr for Format {
    type Err = String;

    fn from_str(s: &str) -> std::result::Result<Self, Self::Err> {
        match s {
            "csv" => Ok(Format::Csv),
            "markdown" | "md" => Ok(Format::Markdown),
            other => Err(format!("unknown format `{other}` (expected csv or markdown)")),
        }
    }
}

#[derive(Debug, Clone)]
pub struct LevelOutcome {
    pub errors: ErrorReport,
    pub diagnostics: SolveDiagnostics,
}

#[derive(Debug, Clone)]
pub struct LevelResult {
    pub n: usize,
    /// Largest triangle diameter.
    pub h: f64,
    pub wall_ms: f64,
    pub outcome: std::result::Result<LevelOutcome, String>,
}

impl LevelResult {
    pub fn errors(&self) -> Option<&ErrorReport> {
        self.outcome.as_ref().ok().map(|o| &o.errors)
    }
}

#[derive(Debug, Clone)]
pub struct ConvergenceReport {
    pub case: String,
    pub degree: usize,
    pub levels: Vec<LevelResult>,
}

/// Quantities with an observed-order column.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Metric {
    L2,
    H1,
    ResidualU,
    ResidualLambda,
}

impl Metric {
    fn of(self, e: &ErrorReport) -> f64 {
        match self {
            Metric::L2 => e.l2_e0,
            Metric::H1 => e.h1_e0,
            Metric::ResidualU => e.resid_u,
            Metric::ResidualLambda => e.resid_lambda,
        }
    }
}

impl ConvergenceReport {
    pub fn failed_levels(&self) -> impl Iterator<Item = &LevelResult> {
        self.levels.iter().filter(|l| l.outcome.is_err())
    }

    /// Observed order on level `i` against level `i - 1`.
    pub fn order(&self, i: usize, metric: Metric) -> Option<f64> {
        if i == 0 || i >= self.levels.len() {
            return None;
        }
        let (coarse, fine) = (&self.levels[i - 1], &self.levels[i]);
        let (a, b) = (metric.of(coarse.errors()?), metric.of(fine.errors()?));
        if a < ORDER_FLOOR || b < ORDER_FLOOR {
            return None;
        }
        Some((a / b).ln() / (fine.n as f64 / coarse.n as f64).ln())
    }

    /// Orders of every level in sequence; `None` where undefined.
    pub fn orders(&self, metric: Metric) -> Vec<Option<f64>> {
        (0..self.levels.len()).map(|i| self.order(i, metric)).collect()
    }

    pub fn emit(&self, format: Format) -> String {
        match format {
            Format::Csv => self.to_csv(),
            Format::Markdown => self.to_markdown(),
        }
    }

    fn to_csv(&self) -> String {
        let mut out = String::from(CSV_HEADER);
        out.push('\n');
        let num = |v: f64| format!("{v:.3e}");
        let opt = |v: Option<f64>| v.map(num).unwrap_or_default();
        for (i, l) in self.levels.iter().enumerate() {
            let fields: Vec<String> = match l.errors() {
                Some(e) => vec![
                    num(e.l2_e0),
                    opt(self.order(i, Metric::L2)),
                    num(e.h1_e0),
                    opt(self.order(i, Metric::H1)),
                    num(e.resid_u),
                    opt(self.order(i, Metric::ResidualU)),
                    num(e.resid_lambda),
                    num(e.stab_u),
                ],
                None => vec![String::new(); 8],
            };
            let _ = writeln!(
                out,
                "{},{},{},{},{},{}",
                self.case,
                self.degree,
                l.n,
                num(l.h),
                fields.join(","),
                num(l.wall_ms)
            );
        }
        out
    }

    fn to_markdown(&self) -> String {
        let mut out = format!("### {} (k = {})\n\n", self.case, self.degree);
        out.push_str("| 1/h | ‖∇e_0‖ | order | ‖e_0‖ | order | \\|\\|\\|e_h\\|\\|\\| | order | \\|\\|\\|λ_h\\|\\|\\| | order |\n");
        out.push_str("|---|---|---|---|---|---|---|---|---|\n");
        let num = |v: f64| format!("{v:.3e}");
        let opt = |v: Option<f64>| v.map(|x| format!("{x:.4}")).unwrap_or_default();
        let mut notes = Vec::new();
        for (i, l) in self.levels.iter().enumerate() {
            match &l.outcome {
                Ok(o) => {
                    let e = &o.errors;
                    let _ = writeln!(
                        out,
                        "| {} | {} | {} | {} | {} | {} | {} | {} | {} |",
                        l.n,
                        num(e.h1_e0),
                        opt(self.order(i, Metric::H1)),
                        num(e.l2_e0),
                        opt(self.order(i, Metric::L2)),
                        num(e.resid_u),
                        opt(self.order(i, Metric::ResidualU)),
                        num(e.resid_lambda),
                        opt(self.order(i, Metric::ResidualLambda)),
                    );
                    if o.diagnostics.multiplier_kernel_dim > 0 {
                        notes.push(format!(
                            "n = {}: multiplier null space of dimension {} removed",
                            l.n, o.diagnostics.multiplier_kernel_dim
                        ));
                    }
                }
                Err(msg) => {
                    let _ = writeln!(out, "| {} | failed | | | | | | | |", l.n);
                    notes.push(format!("n = {}: {msg}", l.n));
                }
            }
        }
        if !notes.is_empty() {
            out.push('\n');
            for n in notes {
                let _ = writeln!(out, "- {n}");
            }
        }
        out
    }
}

/// Parses a comma-separated ladder such as `1,2,4,8`.
pub fn parse_levels(s: &str) -> Result<Vec<usize>> {
    let levels = s
        .split(',')
        .map(|t| t.trim().parse::<usize>().map_err(|_| Error::InvalidLevels(format!("`{t}` is not a positive integer"))))
        .collect::<Result<Vec<_>>>()?;
    check_levels(&levels)?;
    Ok(levels)
}

/// Levels must be positive and each a power-of-two multiple of the previous.
pub fn check_levels(levels: &[usize]) -> Result<()> {
    if levels.is_empty() {
        return Err(Error::InvalidLevels("no levels given".into()));
    }
    if levels[0] == 0 {
        return Err(Error::InvalidLevels("levels must be positive".into()));
    }
    for w in levels.windows(2) {
        if w[1] <= w[0] || w[1] % w[0] != 0 || !(w[1] / w[0]).is_power_of_two() {
            return Err(Error::InvalidLevels(format!(
                "{} does not follow {} by a power-of-two factor",
                w[1], w[0]
            )));
        }
    }
    Ok(())
}

/// Mesh, boundary configuration and assembled system of one level.
pub fn assemble_level(case: &CaseSpec, n: usize, k: usize) -> Result<(Mesh, BoundaryConfig, SaddleSystem)> {
    let mesh = build_uniform_mesh(n)?;
    let config = case.boundary_config(&mesh)?;
    let system = assemble(&mesh, &config, case, k)?;
    Ok((mesh, config, system))
}

fn run_level(case: &CaseSpec, n: usize, k: usize) -> Result<LevelOutcome> {
    let (mesh, config, system) = assemble_level(case, n, k)?;
    let sol = solve(&system)?;
    let ctx = NormContext::new(&mesh, &config, case.diffusion(), k)?;
    let errors = ctx.error_report(&sol.primal, &sol.multiplier, case.exact)?;
    Ok(LevelOutcome {
        errors,
        diagnostics: sol.diagnostics,
    })
}

/// Runs `case` on every level in turn. A level that fails is recorded and
/// the study moves on. With `timing` off, wall times are reported as 0 so
/// the output is reproducible byte for byte.
pub fn run_study(case: &CaseSpec, levels: &[usize], k: usize, timing: bool) -> Result<ConvergenceReport> {
    check_levels(levels)?;
    crate::fespace::check_degree(k)?;
    let levels = levels
        .iter()
        .map(|&n| {
            let start = Instant::now();
            let outcome = run_level(case, n, k).map_err(|e| e.to_string());
            let wall_ms = if timing {
                start.elapsed().as_secs_f64() * 1e3
            } else {
                0.0
            };
            LevelResult {
                n,
                h: std::f64::consts::SQRT_2 / n as f64,
                wall_ms,
                outcome,
            }
        })
        .collect();
    Ok(ConvergenceReport {
        case: case.id.to_string(),
        degree: k,
        levels,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::cases::find_case;

    fn fake(errors: &[f64]) -> ConvergenceReport {
        let levels = errors
            .iter()
            .enumerate()
            .map(|(i, &e)| {
                let n = 1 << i;
                LevelResult {
                    n,
                    h: std::f64::consts::SQRT_2 / n as f64,
                    wall_ms: 0.0,
                    outcome: Ok(LevelOutcome {
                        errors: ErrorReport {
                            l2_e0: e,
                            h1_e0: e,
                            resid_u: e,
                            resid_lambda: e,
                            stab_u: e,
                            strong_resid_u: e,
                            strong_resid_lambda: e,
                        },
                        diagnostics: SolveDiagnostics {
                            relative_residual: 0.0,
                            amplification: 1.0,
                            multiplier_kernel_dim: 0,
                            rhs_kernel_component: 0.0,
                        },
                    }),
                }
            })
            .collect();
        ConvergenceReport {
            case: "fake".into(),
            degree: 1,
            levels,
        }
    }

    #[test]
    fn orders_use_consecutive_log2_ratios() {
        let r = fake(&[1.0, 0.25, 0.0625]);
        let o = r.orders(Metric::L2);
        assert_eq!(o[0], None);
        assert!((o[1].unwrap() - 2.0).abs() < 1e-14);
        assert!((o[2].unwrap() - 2.0).abs() < 1e-14);
    }

    #[test]
    fn no_order_below_floor() {
        let r = fake(&[1e-13, 2e-13, 1e-3]);
        assert_eq!(r.orders(Metric::L2), vec![None, None, None]);
    }

    #[test]
    fn csv_shapes() {
        let empty = ConvergenceReport {
            case: "t1".into(),
            degree: 1,
            levels: Vec::new(),
        };
        assert_eq!(empty.emit(Format::Csv), format!("{CSV_HEADER}\n"));

        let one = fake(&[0.5]);
        let csv = one.emit(Format::Csv);
        let row = csv.lines().nth(1).unwrap();
        let fields: Vec<_> = row.split(',').collect();
        assert_eq!(fields.len(), CSV_HEADER.split(',').count());
        assert_eq!(fields[4], "5.000e-1");
        assert_eq!(fields[5], "");
        assert_eq!(fields[7], "");
        assert_eq!(fields[9], "");
    }

    #[test]
    fn ladder_validation() {
        assert_eq!(parse_levels("1,2,4,8").unwrap(), vec![1, 2, 4, 8]);
        assert_eq!(parse_levels("3, 6,24").unwrap(), vec![3, 6, 24]);
        for bad in ["", "0,1", "2,1", "1,3", "1,2,2", "a"] {
            assert!(matches!(parse_levels(bad), Err(Error::InvalidLevels(_))), "{bad}");
        }
    }

    #[test]
    fn failed_level_does_not_stop_the_study() {
        let mut c = find_case("t1").unwrap();
        c.dirichlet_sides = &[];
        c.neumann_sides = &[];
        let r = run_study(&c, &[1, 2], 1, false).unwrap();
        assert_eq!(r.failed_levels().count(), 2);
        let md = r.emit(Format::Markdown);
        assert!(md.contains("| 1 | failed"));
        assert_eq!(r.emit(Format::Csv).lines().count(), 3);
    }

    #[test]
    fn linear_case_is_exact() {
        let c = find_case("t1").unwrap();
        let r = run_study(&c, &[1, 2, 4], 1, false).unwrap();
        for l in &r.levels {
            let e = l.errors().unwrap();
            assert!(e.l2_e0 < 1e-10 && e.h1_e0 < 1e-10 && e.resid_u < 1e-10 && e.resid_lambda < 1e-10);
        }
        assert!(r.orders(Metric::L2).iter().all(Option::is_none));
    }
}
