use std::io::Write;
use std::net::{IpAddr, SocketAddr};
use std::path::{Path, PathBuf};

use serde_json::{json, Value};

use mpi_core::gateway::{open_model, Gateway, GatewayOptions, ModelProfile};
use mpi_core::induction::{
    naive_induction, p2_chain, word_search_for, words_induction, InductionTarget, Method, PersonalityPrompt, Polarity,
    TraitLexicon,
};
use mpi_core::inventory::{
    bundled_mpi120, bundled_short15, load_inventory, Inventory, InventoryFormat, PromptTemplate, TraitDimension,
};
use mpi_core::json::{to_canonical_string, write_atomic, write_json_file};
use mpi_core::scoring::{administer, compare_to_human, score_responses, AdministerOptions, Closeness, HumanReference};
use mpi_core::vignette::{builtin_context, builtin_contexts, build_questionnaire, generate_essays, merge_essays, SessionDir};

use crate::failure::Failure;
use crate::{Cli, Command, EvaluateArgs, GenerateArgs, InduceArgs, SearchWordsArgs, VignetteCommand};

pub fn run(cli: &Cli) -> Result<(), Failure> {
    match &cli.command {
        Command::Evaluate(args) => evaluate(cli, args),
        Command::Induce(args) => induce(cli, args),
        Command::SearchWords(args) => search_words(cli, args),
        Command::Vignette(VignetteCommand::Generate(args)) => vignette_generate(cli, args),
        Command::Vignette(VignetteCommand::Serve(args)) => {
            let dir = SessionDir::new(&args.session);
            let host: IpAddr = args.host.parse().map_err(|e| Failure::config(format!("--host: {e}")))?;
            mpi_server::serve_blocking(&dir, SocketAddr::new(host, args.port)).map_err(Failure::config)
        }
        Command::Vignette(VignetteCommand::Report(args)) => {
            let dir = SessionDir::new(&args.session);
            let report = dir.write_report()?;
            emit(&report.to_json(), args.out.as_deref())
        }
    }
}

fn profiles(cli: &Cli) -> Result<Vec<ModelProfile>, Failure> {
    let explicit = cli
        .profiles
        .clone()
        .or_else(|| std::env::var_os("MPI_PROFILES").filter(|v| !v.is_empty()).map(PathBuf::from));
    match explicit {
        Some(path) => Ok(ModelProfile::load_all(&path)?),
        None => {
            let local = Path::new("profiles.json");
            if local.exists() {
                Ok(ModelProfile::load_all(local)?)
            } else {
                Ok(Vec::new())
            }
        }
    }
}

fn model(cli: &Cli, spec: &str, inventory: Option<&Inventory>) -> Result<Gateway, Failure> {
    let options = GatewayOptions {
        inventory: inventory.cloned(),
        ..GatewayOptions::default()
    };
    Ok(open_model(spec, &profiles(cli)?, &options)?)
}

fn inventory(spec: &str, format: Option<&str>) -> Result<Inventory, Failure> {
    match spec {
        "builtin:mpi120" | "builtin:mpi-120" => return Ok(bundled_mpi120()),
        "builtin:short15" | "builtin:short-15" => return Ok(bundled_short15()),
        _ => {}
    }
    let path = Path::new(spec);
    let format = match format {
        Some(f) => f.parse().map_err(Failure::config)?,
        None => InventoryFormat::from_path(path),
    };
    load_inventory(path, format).map_err(Failure::config)
}

fn target(trait_: &str, polarity: &str) -> Result<InductionTarget, Failure> {
    let dimension: TraitDimension = trait_.parse().map_err(Failure::config)?;
    let polarity: Polarity = polarity.parse().map_err(Failure::from)?;
    Ok(InductionTarget::new(dimension, polarity))
}

/// Writes canonical JSON to `out`, or to stdout.
fn emit(value: &Value, out: Option<&Path>) -> Result<(), Failure> {
    match out {
        Some(path) => write_json_file(path, value).map_err(|e| Failure::config(format!("{}: {e}", path.display()))),
        None => {
            let mut stdout = std::io::stdout().lock();
            stdout
                .write_all(to_canonical_string(value).as_bytes())
                .and_then(|_| stdout.flush())
                .map_err(|e| Failure::config(format!("stdout: {e}")))
        }
    }
}

fn read_text(path: &Path) -> Result<String, Failure> {
    std::fs::read_to_string(path).map_err(|e| Failure::config(format!("{}: {e}", path.display())))
}

/// A prompt file is a JSON prompt object or, failing that, a plain prefix.
fn persona_prompt(path: &Path) -> Result<(Option<PersonalityPrompt>, String), Failure> {
    let text = read_text(path)?;
    if text.trim_start().starts_with('{') {
        let prompt = PersonalityPrompt::from_json(&text).map_err(|e| Failure::config(format!("{}: {e}", path.display())))?;
        let prefix = prompt.final_prefix.clone();
        return Ok((Some(prompt), prefix));
    }
    let prefix = text.trim().to_string();
    if prefix.is_empty() {
        return Err(Failure::config(format!("{}: empty personality prompt", path.display())));
    }
    Ok((None, prefix))
}

fn evaluate(cli: &Cli, args: &EvaluateArgs) -> Result<(), Failure> {
    if !(0.0..=1.0).contains(&args.max_invalid) {
        return Err(Failure::config("--max-invalid must lie in [0, 1]"));
    }
    let inv = inventory(&args.inventory, args.format.as_deref())?;
    let gateway = model(cli, &args.model, Some(&inv))?;
    let template_id = args.template.clone().or_else(|| gateway.profile().template_id.clone());
    let template = match template_id {
        Some(id) => PromptTemplate::resolve(&id).map_err(Failure::config)?,
        None => PromptTemplate::default_template(),
    };
    let (prompt, prefix) = match &args.persona_prompt {
        Some(path) => {
            let (prompt, prefix) = persona_prompt(path)?;
            (prompt, Some(prefix))
        }
        None => (None, None),
    };
    let options = AdministerOptions {
        persona_prefix: prefix,
        explain: args.explain,
        max_invalid_fraction: args.max_invalid,
    };
    let responses = administer(&gateway, &inv, &template, &options)?;
    if let Some(path) = &args.responses {
        let mut lines = String::new();
        for r in &responses {
            lines.push_str(&serde_json::to_string(r).expect("response serializes"));
            lines.push('\n');
        }
        write_atomic(path, lines.as_bytes()).map_err(|e| Failure::config(format!("{}: {e}", path.display())))?;
    }
    let report = score_responses(&gateway.profile().name, &responses, &inv)
        .map_err(Failure::config)?
        .with_induction(prompt);
    let mut value = report.to_json();
    value["template"] = json!(template.id);
    if args.explain {
        let explanations: serde_json::Map<String, Value> = responses
            .iter()
            .map(|r| (r.item_id.clone(), json!(r.explanation)))
            .collect();
        value["explanations"] = Value::Object(explanations);
    }
    if args.compare_human {
        value["human_comparison"] = match compare_to_human(&report, &HumanReference::default(), Closeness::default()) {
            Ok(comparison) => comparison.to_json(),
            Err(e) => json!({ "error": e.to_string() }),
        };
    }
    emit(&value, args.out.as_deref())
}

fn induce(cli: &Cli, args: &InduceArgs) -> Result<(), Failure> {
    let target = target(&args.trait_, &args.polarity)?;
    let mut lexicon = match &args.lexicon {
        Some(path) => TraitLexicon::load(path)?,
        None => TraitLexicon::default(),
    };
    if args.antonyms == "model" {
        lexicon = lexicon.without_negatives();
    }
    let method: Method = serde_json::from_value(json!(args.method)).map_err(Failure::config)?;
    let prompt = match method {
        Method::Naive => naive_induction(target, &lexicon)?,
        Method::P2 => {
            let spec = args.model.as_deref().ok_or_else(|| Failure::config("--method p2 needs --model"))?;
            let gateway = model(cli, spec, None)?;
            p2_chain(&gateway, target, &lexicon)?
        }
        Method::Words => {
            let spec = args.model.as_deref().ok_or_else(|| Failure::config("--method words needs --model"))?;
            let inv = inventory(&args.inventory, None)?;
            let gateway = model(cli, spec, Some(&inv))?;
            let (prompt, result) = words_induction(&gateway, &inv, target, &lexicon, args.k)?;
            log::info!("selected {:?} from {} candidates", result.selected, result.table.len());
            prompt
        }
    };
    emit(&prompt.to_json(), args.out.as_deref())
}

fn candidates(path: &Path) -> Result<Vec<String>, Failure> {
    let text = read_text(path)?;
    let words: Vec<String> = if text.trim_start().starts_with('[') {
        serde_json::from_str(&text).map_err(|e| Failure::config(format!("{}: {e}", path.display())))?
    } else {
        text.lines().map(str::to_string).collect()
    };
    let mut out: Vec<String> = Vec::new();
    for w in words.iter().map(|w| w.trim()).filter(|w| !w.is_empty()) {
        if !out.iter().any(|o| o == w) {
            out.push(w.to_string());
        }
    }
    Ok(out)
}

fn search_words(cli: &Cli, args: &SearchWordsArgs) -> Result<(), Failure> {
    let target = target(&args.trait_, &args.polarity)?;
    let words = candidates(&args.candidates)?;
    let inv = inventory(&args.inventory, None)?;
    let gateway = model(cli, &args.eval_model, Some(&inv))?;
    let result = word_search_for(&gateway, &inv, target, &words, args.k)?;
    emit(&result.to_json(), args.out.as_deref())
}

fn vignette_generate(cli: &Cli, args: &GenerateArgs) -> Result<(), Failure> {
    let dir = SessionDir::new(&args.session);
    let mut jobs = Vec::new();
    for path in &args.prompt {
        let text = read_text(path)?;
        let prompt = PersonalityPrompt::from_json(&text).map_err(|e| Failure::config(format!("{}: {e}", path.display())))?;
        let context = builtin_context(prompt.target.dimension);
        jobs.push((Some(prompt), context));
    }
    if args.prompt.is_empty() || args.neutral {
        jobs.extend(builtin_contexts().into_iter().map(|c| (None, c)));
    }
    let gateway = model(cli, &args.model, None)?;
    let essays = merge_essays(dir.load_essays()?, generate_essays(&gateway, &jobs)?);
    dir.save_essays(&essays)?;

    let rated = dir.ratings_path().exists() && !dir.open_ratings()?.records().is_empty();
    let session_built = if essays.len() == 15 && !rated {
        let session = build_questionnaire(&dir.default_id(), &essays, cli.seed)?;
        dir.save_session(&session)?;
        true
    } else {
        if rated {
            log::warn!("ratings already exist; the questionnaire is left unchanged");
        }
        false
    };
    emit(
        &json!({
            "session_id": dir.default_id(),
            "essays": essays.len(),
            "generated": jobs.len(),
            "questionnaire_written": session_built,
        }),
        None,
    )
}
