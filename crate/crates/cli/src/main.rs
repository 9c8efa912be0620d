//! `mconv`: command-line front end for the middle-convolution / rigidity
//! toolkit. Subcommands replay the orthogonal-group pipelines end to end and
//! expose the individual operations as JSON-in/JSON-out filters.
//!
//! Exit codes: 0 success, 1 a verified check failed, 2 malformed input.

use clap::{Args, Parser, Subcommand};
use mconv_core::braid::{braid_word_act, close_with_inverse_product, index_of_rigidity, BraidWord};
use mconv_core::convolution::{coalesce, mc_lambda, scalar_mult, verify_rank_preservation};
use mconv_core::field::{FieldElement, FiniteField};
use mconv_core::forms::{invariant_form_space, y_form_on, QuadraticSpace};
use mconv_core::group::{
    braid_orbit, enumerate_e_in, kappa_stabilizer, nielsen_membership, InnTuple, SmallGroup,
    SmallGroupJson,
};
use mconv_core::matrix::Subspace;
use mconv_core::pipeline::{
    run_prop_so_div4, run_prop_so_general_q, run_prop_so_not_div4, PipelineReport,
};
use mconv_core::tuple::{RepTuple, RepTupleJson};
use serde_json::{json, Value};
use std::fs;
use std::process::ExitCode;

#[derive(Parser)]
#[command(name = "mconv", about = "exact middle convolution, braid actions and rigidity checks over finite fields", version)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run a full construction pipeline and emit its certificate.
    Pipeline {
        #[command(subcommand)]
        which: PipelineCmd,
    },
    /// Middle convolution, scalar multiplication and coalescence.
    Mc {
        #[command(subcommand)]
        which: McCmd,
    },
    /// Braid moves on matrix tuples and braid orbits of group tuples.
    Braid {
        #[command(subcommand)]
        which: BraidCmd,
    },
    /// Rigidity index, E^in enumeration, kappa stabilizers, Nielsen tests.
    Rigidity {
        #[command(subcommand)]
        which: RigidityCmd,
    },
    /// Invariant-form analysis of a tuple.
    Forms {
        #[command(subcommand)]
        which: FormsCmd,
    },
    /// The bundled small-group tables.
    Catalog {
        #[command(subcommand)]
        which: CatalogCmd,
    },
}

#[derive(Args)]
struct OutOpts {
    /// Write the JSON result here instead of stdout.
    #[arg(long)]
    out: Option<String>,
    /// Emit JSON (the default; kept as an explicit flag).
    #[arg(long, conflicts_with = "text")]
    json: bool,
    /// Human-readable rendering instead of JSON where available.
    #[arg(long)]
    text: bool,
}

#[derive(Subcommand)]
enum PipelineCmd {
    /// T_0 construction: p = 7 (mod 12), target dimension 2(2m+2).
    SoDiv4 {
        #[arg(long)]
        p: u64,
        #[arg(long)]
        m: usize,
        #[command(flatten)]
        out: OutOpts,
    },
    /// T_1 construction: p = 7 (mod 12), target dimension 2(2m+3).
    SoNotDiv4 {
        #[arg(long)]
        p: u64,
        #[arg(long)]
        m: usize,
        #[command(flatten)]
        out: OutOpts,
    },
    /// T_2 construction over F_q, q = 3 (mod 4).
    SoGeneralQ {
        #[arg(long)]
        q: u64,
        #[arg(long)]
        m: usize,
        #[command(flatten)]
        out: OutOpts,
    },
}

#[derive(Subcommand)]
enum McCmd {
    /// Middle convolution MC_lambda; emits the full convolution record.
    Apply {
        #[arg(long, allow_hyphen_values = true)]
        lambda: String,
        #[arg(long = "in", value_name = "FILE")]
        input: String,
        #[command(flatten)]
        out: OutOpts,
    },
    /// Slot-wise scalar multiplication M_Lambda.
    Scalar {
        /// Comma-separated scalars, one per slot.
        #[arg(long, allow_hyphen_values = true)]
        lambdas: String,
        #[arg(long = "in", value_name = "FILE")]
        input: String,
        #[command(flatten)]
        out: OutOpts,
    },
    /// Merge the last two slots by multiplication.
    Coalesce {
        #[arg(long = "in", value_name = "FILE")]
        input: String,
        #[command(flatten)]
        out: OutOpts,
    },
    /// Rank-preservation report between a tuple and its middle convolution.
    VerifyRanks {
        #[arg(long, allow_hyphen_values = true)]
        lambda: String,
        #[arg(long = "in", value_name = "FILE")]
        input: String,
        #[command(flatten)]
        out: OutOpts,
    },
}

#[derive(Subcommand)]
enum BraidCmd {
    /// Apply a braid word (comma-separated signed generator indices).
    Act {
        #[arg(long, allow_hyphen_values = true)]
        word: String,
        #[arg(long = "in", value_name = "FILE")]
        input: String,
        #[command(flatten)]
        out: OutOpts,
    },
    /// Braid orbit of a generating tuple of a small group.
    Orbit {
        #[arg(long)]
        group: String,
        /// Comma-separated element indices with product 1.
        #[arg(long)]
        tuple: String,
        /// Orbit size cap (default 10^6; MCONV_BUDGET overrides).
        #[arg(long)]
        budget: Option<usize>,
        #[command(flatten)]
        out: OutOpts,
    },
}

#[derive(Subcommand)]
enum RigidityCmd {
    /// Index of rigidity of a product-1 tuple.
    Index {
        #[arg(long = "in", value_name = "FILE")]
        input: String,
        /// Close the tuple with the inverse of its product first.
        #[arg(long)]
        close: bool,
        #[command(flatten)]
        out: OutOpts,
    },
    /// Enumerate E^in classes for prescribed conjugacy classes.
    EIn {
        #[arg(long)]
        group: String,
        /// Comma-separated class names, e.g. 2A,2A,3A.
        #[arg(long)]
        classes: String,
        #[arg(long)]
        budget: Option<usize>,
        #[command(flatten)]
        out: OutOpts,
    },
    /// Power-map stabilizer of a class set and its rationality flag.
    Kappa {
        #[arg(long)]
        group: String,
        #[arg(long)]
        classes: String,
        #[command(flatten)]
        out: OutOpts,
    },
    /// Does some slot permutation land the tuple in the class list?
    Nielsen {
        #[arg(long)]
        group: String,
        #[arg(long)]
        tuple: String,
        #[arg(long)]
        classes: String,
        #[command(flatten)]
        out: OutOpts,
    },
}

#[derive(Subcommand)]
enum FormsCmd {
    /// Invariant bilinear forms of a tuple, and the convolution form at
    /// lambda if the invariant space is 1-dimensional.
    Analyze {
        #[arg(long)]
        tuple: String,
        #[arg(long, allow_hyphen_values = true)]
        lambda: String,
        #[command(flatten)]
        out: OutOpts,
    },
}

#[derive(Subcommand)]
enum CatalogCmd {
    /// Names and orders of the bundled groups.
    List,
    /// Emit one bundled group as SmallGroup JSON.
    Show {
        #[arg(long)]
        name: String,
    },
}

enum CliError {
    Input(String),
    CheckFailed,
}

impl From<String> for CliError {
    fn from(s: String) -> Self {
        CliError::Input(s)
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(CliError::CheckFailed) => ExitCode::from(1),
        Err(CliError::Input(msg)) => {
            eprintln!("error: {msg}");
            ExitCode::from(2)
        }
    }
}

fn read_tuple(path: &str) -> Result<RepTuple, String> {
    let data = fs::read_to_string(path).map_err(|e| format!("{path}: {e}"))?;
    let raw: RepTupleJson =
        serde_json::from_str(&data).map_err(|e| format!("{path}: {e}"))?;
    RepTuple::from_json(&raw)
}

fn read_group(path: &str) -> Result<SmallGroup, String> {
    let data = fs::read_to_string(path).map_err(|e| format!("{path}: {e}"))?;
    let raw: SmallGroupJson =
        serde_json::from_str(&data).map_err(|e| format!("{path}: {e}"))?;
    SmallGroup::from_json(&raw).map_err(|e| e.to_string())
}

fn parse_lambda(field: &FiniteField, s: &str) -> Result<FieldElement, String> {
    let parts: Vec<&str> = s.split(',').collect();
    let coeffs: Vec<i64> = parts
        .iter()
        .map(|p| p.trim().parse::<i64>().map_err(|e| format!("lambda: {e}")))
        .collect::<Result<_, _>>()?;
    if coeffs.len() > field.degree() {
        return Err("lambda has more coefficients than the extension degree".into());
    }
    let l = field.element(&coeffs);
    Ok(l)
}

fn parse_csv_i64(s: &str) -> Result<Vec<i64>, String> {
    s.split(',')
        .map(|p| p.trim().parse::<i64>().map_err(|e| e.to_string()))
        .collect()
}

fn emit(out: &OutOpts, value: &Value, text: Option<String>) -> Result<(), String> {
    let payload = if out.text {
        text.unwrap_or_else(|| format!("{value:#}"))
    } else {
        format!("{value:#}")
    };
    match &out.out {
        Some(path) => fs::write(path, payload + "\n").map_err(|e| e.to_string()),
        None => {
            println!("{payload}");
            Ok(())
        }
    }
}

fn subspace_json(s: &Subspace) -> Value {
    json!({
        "ambient": s.ambient(),
        "dim": s.dim(),
        "basis": s.basis().to_json(),
    })
}

fn budget_or_default(flag: Option<usize>) -> usize {
    flag.or_else(|| {
        std::env::var("MCONV_BUDGET")
            .ok()
            .and_then(|v| v.parse().ok())
    })
    .unwrap_or(1_000_000)
}

fn pipeline_out(rep: PipelineReport, out: &OutOpts) -> Result<(), CliError> {
    let text = rep.render_text();
    let value = serde_json::to_value(&rep).map_err(|e| e.to_string())?;
    emit(out, &value, Some(text))?;
    if rep.passed() {
        Ok(())
    } else {
        Err(CliError::CheckFailed)
    }
}

fn run(cli: Cli) -> Result<(), CliError> {
    match cli.command {
        Command::Pipeline { which } => match which {
            PipelineCmd::SoDiv4 { p, m, out } => {
                let rep = run_prop_so_div4(p, m).map_err(|e| e.to_string())?;
                pipeline_out(rep, &out)
            }
            PipelineCmd::SoNotDiv4 { p, m, out } => {
                let rep = run_prop_so_not_div4(p, m).map_err(|e| e.to_string())?;
                pipeline_out(rep, &out)
            }
            PipelineCmd::SoGeneralQ { q, m, out } => {
                let rep = run_prop_so_general_q(q, m).map_err(|e| e.to_string())?;
                pipeline_out(rep, &out)
            }
        },
        Command::Mc { which } => match which {
            McCmd::Apply { lambda, input, out } => {
                let t = read_tuple(&input)?;
                let l = parse_lambda(t.field(), &lambda)?;
                let mc = mc_lambda(&t, &l).map_err(|e| e.to_string())?;
                let value = json!({
                    "field": t.field(),
                    "lambda": l.to_json(),
                    "big": mc.big.to_json(),
                    "k_space": subspace_json(&mc.k_space),
                    "l_space": subspace_json(&mc.l_space),
                    "quotient": mc.quotient.to_json(),
                    "projection": mc.projection.to_json(),
                    "section": mc.section.to_json(),
                    "dim": mc.dim(),
                });
                emit(&out, &value, None)?;
                Ok(())
            }
            McCmd::Scalar { lambdas, input, out } => {
                let t = read_tuple(&input)?;
                let coeffs = parse_csv_i64(&lambdas)?;
                if coeffs.len() != t.arity() {
                    return Err(CliError::Input("need one scalar per slot".into()));
                }
                let ls: Vec<FieldElement> =
                    coeffs.iter().map(|&c| t.field().from_i64(c)).collect();
                let res = scalar_mult(&t, &ls).map_err(|e| e.to_string())?;
                emit(&out, &serde_json::to_value(res.to_json()).map_err(|e| e.to_string())?, None)?;
                Ok(())
            }
            McCmd::Coalesce { input, out } => {
                let t = read_tuple(&input)?;
                let res = coalesce(&t).map_err(|e| e.to_string())?;
                emit(&out, &serde_json::to_value(res.to_json()).map_err(|e| e.to_string())?, None)?;
                Ok(())
            }
            McCmd::VerifyRanks { lambda, input, out } => {
                let t = read_tuple(&input)?;
                let l = parse_lambda(t.field(), &lambda)?;
                let rep = verify_rank_preservation(&t, &l).map_err(|e| e.to_string())?;
                let value = json!({
                    "slot_input_ranks": rep.slot_input_ranks,
                    "slot_output_ranks": rep.slot_output_ranks,
                    "slots_preserved": rep.slots_preserved,
                    "product_input_rank": rep.product_input_rank,
                    "product_output_rank": rep.product_output_rank,
                    "product_preserved": rep.product_preserved,
                    "all_hold": rep.all_hold(),
                });
                emit(&out, &value, None)?;
                if rep.all_hold() {
                    Ok(())
                } else {
                    Err(CliError::CheckFailed)
                }
            }
        },
        Command::Braid { which } => match which {
            BraidCmd::Act { word, input, out } => {
                let t = read_tuple(&input)?;
                let letters: Vec<i32> = parse_csv_i64(&word)?
                    .into_iter()
                    .map(|x| x as i32)
                    .collect();
                let w = BraidWord::new(t.arity(), letters).map_err(|e| e.to_string())?;
                let res = braid_word_act(&w, &t).map_err(|e| e.to_string())?;
                emit(&out, &serde_json::to_value(res.to_json()).map_err(|e| e.to_string())?, None)?;
                Ok(())
            }
            BraidCmd::Orbit {
                group,
                tuple,
                budget,
                out,
            } => {
                let g = read_group(&group)?;
                let elems: Vec<u32> = parse_csv_i64(&tuple)?
                    .into_iter()
                    .map(|x| x as u32)
                    .collect();
                let t = InnTuple::new(&g, elems).map_err(|e| e.to_string())?;
                let orbit = braid_orbit(&g, &t, budget_or_default(budget))
                    .map_err(|e| e.to_string())?;
                let value = json!({
                    "orbit_size": orbit.len(),
                    "orbit": orbit.iter().map(|x| x.canonical().to_vec()).collect::<Vec<_>>(),
                });
                emit(&out, &value, None)?;
                Ok(())
            }
        },
        Command::Rigidity { which } => match which {
            RigidityCmd::Index { input, close, out } => {
                let mut t = read_tuple(&input)?;
                if close {
                    t = close_with_inverse_product(&t);
                }
                let idx = index_of_rigidity(&t).map_err(|e| e.to_string())?;
                let value = json!({
                    "index": idx,
                    "linearly_rigid": idx == 2,
                    "arity": t.arity(),
                    "dim": t.dim(),
                });
                emit(&out, &value, None)?;
                Ok(())
            }
            RigidityCmd::EIn {
                group,
                classes,
                budget,
                out,
            } => {
                let g = read_group(&group)?;
                let class_ids: Vec<usize> = classes
                    .split(',')
                    .map(|n| g.class_by_name(n.trim()).map_err(|e| e.to_string()))
                    .collect::<Result<_, String>>()?;
                let found = enumerate_e_in(&g, &class_ids, budget_or_default(budget))
                    .map_err(|e| e.to_string())?;
                let value = json!({
                    "class_count": found.len(),
                    "rigid": found.len() == 1,
                    "classes": found.iter().map(|t| t.canonical().to_vec()).collect::<Vec<_>>(),
                });
                emit(&out, &value, None)?;
                Ok(())
            }
            RigidityCmd::Kappa { group, classes, out } => {
                let g = read_group(&group)?;
                let class_ids: Vec<usize> = classes
                    .split(',')
                    .map(|n| g.class_by_name(n.trim()).map_err(|e| e.to_string()))
                    .collect::<Result<_, String>>()?;
                let (stab, rational) = kappa_stabilizer(&g, &class_ids);
                let value = json!({
                    "exponent": g.exponent(),
                    "stabilizer": stab,
                    "rational": rational,
                });
                emit(&out, &value, None)?;
                Ok(())
            }
            RigidityCmd::Nielsen {
                group,
                tuple,
                classes,
                out,
            } => {
                let g = read_group(&group)?;
                let elems: Vec<u32> = parse_csv_i64(&tuple)?
                    .into_iter()
                    .map(|x| x as u32)
                    .collect();
                let t = InnTuple::new(&g, elems).map_err(|e| e.to_string())?;
                let class_ids: Vec<usize> = classes
                    .split(',')
                    .map(|n| g.class_by_name(n.trim()).map_err(|e| e.to_string()))
                    .collect::<Result<_, String>>()?;
                let member = nielsen_membership(&g, &t, &class_ids);
                emit(&out, &json!({ "member": member }), None)?;
                Ok(())
            }
        },
        Command::Forms { which } => match which {
            FormsCmd::Analyze { tuple, lambda, out } => {
                let t = read_tuple(&tuple)?;
                let l = parse_lambda(t.field(), &lambda)?;
                let space = invariant_form_space(&t);
                let mut value = json!({
                    "invariant_form_space_dim": space.len(),
                    "invariant_forms": space.iter().map(|m| m.to_json()).collect::<Vec<_>>(),
                });
                if space.len() == 1 {
                    let mc = mc_lambda(&t, &l).map_err(|e| e.to_string())?;
                    match y_form_on(&t, &l, &space[0], &mc) {
                        Ok(form) => {
                            let mut entry = json!({
                                "gram": form.gram().to_json(),
                                "kind": format!("{:?}", form.kind()).to_lowercase(),
                                "nondegenerate": form.is_nondegenerate(),
                                "dim": form.dim(),
                            });
                            if let Ok(space) = QuadraticSpace::new(form.clone()) {
                                if form.dim() % 2 == 0 {
                                    if let Ok(ty) = space.quadratic_type() {
                                        entry["type"] =
                                            json!(format!("{ty:?}").to_lowercase());
                                        entry["witt_index"] = json!(space.witt_index());
                                    }
                                }
                            }
                            value["convolution_form"] = entry;
                        }
                        Err(e) => {
                            value["convolution_form_error"] = json!(e.to_string());
                        }
                    }
                }
                emit(&out, &value, None)?;
                Ok(())
            }
        },
        Command::Catalog { which } => match which {
            CatalogCmd::List => {
                for spec in mconv_core::catalog::groups_up_to_24() {
                    println!("{:20} order {}", spec.name, spec.group.order());
                }
                Ok(())
            }
            CatalogCmd::Show { name } => {
                let bundle = mconv_core::catalog::groups_up_to_24();
                let found = bundle
                    .iter()
                    .find(|s| s.name == name)
                    .ok_or_else(|| format!("no bundled group named {name}"))?;
                let value =
                    serde_json::to_value(found.group.to_json()).map_err(|e| e.to_string())?;
                println!("{value:#}");
                Ok(())
            }
        },
    }
}
