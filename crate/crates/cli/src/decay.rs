use serde::Serialize;
use soliton_lab::decay::{
    comparison_bound, default_ray_range, main_exponents, measure_decay, sigma_select, term_orders,
    ComparisonSolution, DecayFit, DecayQuantity, TheoremParams, DECAY_CSV_COLUMNS,
};
use soliton_lab::models::SolitonModel;
use soliton_lab::verify::fmt_real;

use crate::config::Settings;
use crate::output::{build_model, csv_header, write_json, write_text};
use crate::{CliError, Outcome};

const BRYANT_DEFAULT_RANGE: (f64, f64) = (100.0, 1e4);
/// The λ stencils reach past the last ray radius.
const BRYANT_MARGIN: f64 = 1.1;
const COMPARISON_TAUS: [f64; 11] = [0.0, 0.5, 1.0, 2.0, 5.0, 10.0, 15.0, 20.0, 30.0, 40.0, 50.0];

#[derive(Serialize)]
struct ExponentRow {
    a: f64,
    b: f64,
    sigma: f64,
    e1: f64,
    e2: f64,
    effective: f64,
    asymptotically_round: bool,
    order_i: f64,
    order_ii: f64,
    order_iii: f64,
}

const TABLE_CSV_COLUMNS: &str =
    "a,b,sigma,e1,e2,effective,asymptotically_round,order_i,order_ii,order_iii";

impl ExponentRow {
    fn csv_row(&self) -> String {
        let reals = [self.a, self.b, self.sigma, self.e1, self.e2, self.effective]
            .map(fmt_real)
            .join(",");
        let orders = [self.order_i, self.order_ii, self.order_iii]
            .map(fmt_real)
            .join(",");
        format!("{reals},{},{orders}", self.asymptotically_round)
    }
}

#[derive(Serialize)]
struct ComparisonRow {
    tau: f64,
    closed_form: f64,
    numerical: f64,
}

#[derive(Serialize)]
struct Comparison {
    #[serde(flatten)]
    solution: ComparisonSolution,
    limit: f64,
    rows: Vec<ComparisonRow>,
    max_difference: f64,
    sup_bound_holds: bool,
}

#[derive(Serialize)]
struct Body<'a> {
    fits: &'a [DecayFit],
    #[serde(skip_serializing_if = "Option::is_none")]
    exponent_table: Option<&'a [ExponentRow]>,
    #[serde(skip_serializing_if = "Option::is_none")]
    comparison: Option<&'a Comparison>,
}

fn exponent_table(s: &Settings) -> Result<Vec<ExponentRow>, CliError> {
    let (a_list, b_list): (Vec<f64>, Vec<f64>) = (s.list("a")?, s.list("b")?);
    if a_list.is_empty() || b_list.is_empty() {
        return Err(CliError::Usage("table_exponents needs --a and --b".into()));
    }
    let mut rows = Vec::new();
    for &a in &a_list {
        for &b in &b_list {
            let params = TheoremParams::exponents(a, b)?;
            let sigma = sigma_select(&params);
            let m = main_exponents(&params);
            let t = term_orders(&params, sigma);
            rows.push(ExponentRow {
                a,
                b,
                sigma,
                e1: m.e1,
                e2: m.e2,
                effective: m.effective,
                asymptotically_round: m.asymptotically_round,
                order_i: t.order_i,
                order_ii: t.order_ii,
                order_iii: t.order_iii,
            });
        }
    }
    Ok(rows)
}

fn comparison(c: f64, u0: f64) -> Result<Comparison, CliError> {
    let solution = comparison_bound(c, u0)?;
    let mut rows = Vec::with_capacity(COMPARISON_TAUS.len());
    for &tau in &COMPARISON_TAUS {
        rows.push(ComparisonRow {
            tau,
            closed_form: solution.eval(tau),
            numerical: solution.integrate_numerically(tau)?,
        });
    }
    let max_difference = rows
        .iter()
        .map(|r| (r.closed_form - r.numerical).abs())
        .fold(0.0, f64::max);
    let sup_bound_holds = rows
        .iter()
        .all(|r| r.closed_form.max(r.numerical) <= solution.sup_bound * (1.0 + 1e-12));
    Ok(Comparison {
        solution,
        limit: solution.limit(),
        rows,
        max_difference,
        sup_bound_holds,
    })
}

fn ray_range(s: &Settings, default: (f64, f64)) -> Result<(f64, f64), CliError> {
    Ok((
        s.parse_or("rmin", default.0)?,
        s.parse_or("rmax", default.1)?,
    ))
}

fn fits(s: &mut Settings, names: &[String]) -> Result<Vec<DecayFit>, CliError> {
    s.set_default("quantity", "R");
    s.set_default("n", 32);
    let quantities = s.list::<DecayQuantity>("quantity")?;
    if quantities.is_empty() {
        return Err(CliError::Usage(format!(
            "no quantity given; valid quantities: {}",
            DecayQuantity::IDS
        )));
    }
    let n: usize = s.parse_or("n", 32)?;
    let tol: Option<f64> = s.parse("consistency_tol")?;
    s.set_default_real("bryant_tol", 1e-10);
    let bryant_tol: f64 = s.parse_or("bryant_tol", 1e-10)?;
    let mut out = Vec::new();
    for name in names {
        let model: Box<dyn SolitonModel> = if name == "bryant" {
            let (_, hi) = ray_range(s, BRYANT_DEFAULT_RANGE)?;
            if !(hi > 0.0) || !hi.is_finite() {
                return Err(CliError::Usage(format!("rmax must be positive, got {hi}")));
            }
            build_model(name, BRYANT_MARGIN * hi, bryant_tol)?
        } else {
            build_model(name, 0.0, bryant_tol)?
        };
        let range = match name.as_str() {
            "bryant" => ray_range(s, BRYANT_DEFAULT_RANGE)?,
            _ => ray_range(s, default_ray_range(model.as_ref())?)?,
        };
        for &q in &quantities {
            let mut fit = measure_decay(model.as_ref(), q, range, n)?;
            if let Some(t) = tol {
                fit.check_against(fit.predicted_exponent, t);
            }
            out.push(fit);
        }
    }
    Ok(out)
}

pub fn run(s: &mut Settings) -> Outcome {
    let table = if s.flag("table_exponents")? {
        Some(exponent_table(s)?)
    } else {
        None
    };
    let compare = match s.parse::<f64>("comparison_c")? {
        Some(c) => Some(comparison(c, s.parse_or("comparison_u0", 0.0)?)?),
        None if s.str("comparison_u0").is_some() => {
            return Err(CliError::Usage("comparison_u0 needs comparison_c".into()))
        }
        None => None,
    };
    let names: Vec<String> = s.list("model")?;
    if names.is_empty() && table.is_none() && compare.is_none() {
        return Err(CliError::Usage(
            "decay needs --model, --table-exponents or --comparison-c".into(),
        ));
    }
    let fits = if names.is_empty() {
        Vec::new()
    } else {
        fits(s, &names)?
    };

    let json = s.str("json").map(str::to_owned);
    let csv = s.str("csv").map(str::to_owned);
    if json.is_some() || csv.is_none() {
        let body = Body {
            fits: &fits,
            exponent_table: table.as_deref(),
            comparison: compare.as_ref(),
        };
        write_json(json.as_deref(), "decay", s, body)?;
    }
    if let Some(path) = &csv {
        let mut text: String = csv_header("decay", s)
            .iter()
            .map(|l| format!("# {l}\n"))
            .collect();
        if !fits.is_empty() || table.is_none() {
            text.push_str(DECAY_CSV_COLUMNS);
            text.push('\n');
            for f in &fits {
                text.push_str(&f.csv_row());
                text.push('\n');
            }
        }
        if let Some(rows) = &table {
            if !fits.is_empty() {
                text.push('\n');
            }
            text.push_str(TABLE_CSV_COLUMNS);
            text.push('\n');
            for r in rows {
                text.push_str(&r.csv_row());
                text.push('\n');
            }
        }
        write_text(Some(path), &text)?;
    }

    for f in &fits {
        let exp = f.exponent.map_or_else(|| "-".into(), |e| format!("{e:.4}"));
        let pred = f
            .predicted_exponent
            .map_or_else(String::new, |p| format!("  predicted <= {p}"));
        eprintln!(
            "{:<8} {:<18} exponent {:>8}  {}{pred}",
            f.model, f.quantity, exp, f.verdict
        );
    }
    if let Some(c) = &compare {
        eprintln!(
            "comparison C = {}, u0 = {}: max |closed - numerical| = {:.3e}, sup bound {}",
            c.solution.c, c.solution.u0, c.max_difference, c.solution.sup_bound
        );
    }
    let inconsistent = fits.iter().filter(|f| f.consistent == Some(false)).count();
    if inconsistent > 0 {
        eprintln!("{inconsistent} fits exceed their predicted exponent");
    }
    Ok(inconsistent == 0 && compare.as_ref().is_none_or(|c| c.sup_bound_holds))
}
