use std::fs;

use gue::{ebh, global_test, merge, EValueSet};
use serde_json::json;

use crate::failure::{list, Failure};
use crate::EvalueArgs;

fn read_values(args: &EvalueArgs) -> Result<EValueSet<f64>, Failure> {
    let mut tokens: Vec<String> = args.values.clone();
    if let Some(path) = &args.file {
        let text = fs::read_to_string(path)
            .map_err(|e| Failure::usage(format!("{}: {e}", path.display())))?;
        tokens.extend(
            text.split(|c: char| c.is_whitespace() || c == ',')
                .filter(|t| !t.is_empty())
                .map(String::from),
        );
    }
    let values = tokens
        .iter()
        .map(|t| t.trim_matches(|c| c == '[' || c == ']'))
        .filter(|t| !t.is_empty())
        .map(|t| {
            t.parse::<f64>()
                .map_err(|_| Failure::usage(format!("`{t}` is not a number")))
        })
        .collect::<Result<Vec<f64>, Failure>>()?;
    EValueSet::new(values).map_err(Failure::usage)
}

pub fn run_ebh(args: EvalueArgs) -> Result<(), Failure> {
    let set = read_values(&args)?;
    let result = ebh(&set, args.alpha).map_err(Failure::usage)?;
    let merged = merge(&set).value;
    if args.json {
        let doc = json!({
            "alpha": args.alpha,
            "order": result.order,
            "transformed": result.transformed,
            "discoveries": result.discoveries,
            "merged": merged,
        });
        println!("{doc}");
    } else {
        println!("transformed: {}", list(&result.transformed));
        println!("discoveries: {}", list(&result.discoveries));
        println!("merged: {merged}");
    }
    Ok(())
}

pub fn run_merge(args: EvalueArgs) -> Result<(), Failure> {
    let set = read_values(&args)?;
    let merged = merge(&set);
    let reject = global_test(&merged, args.alpha).map_err(Failure::usage)?;
    if args.json {
        println!(
            "{}",
            json!({ "alpha": args.alpha, "merged": merged.value, "reject": reject })
        );
    } else {
        println!("merged: {}", merged.value);
        println!(
            "decision at alpha = {}: {}",
            args.alpha,
            if reject { "reject" } else { "fail to reject" }
        );
    }
    Ok(())
}
