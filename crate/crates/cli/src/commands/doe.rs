use serde_json::json;
use wingforge::doe::{peel_split, sample_uniform, scan_grid, PeelMode, Split, SplitConfig};

use super::{parse_values, seed_or_random, Output};
use crate::args::{PeelArg, SampleArgs, ScanArgs, SplitArgs};
use crate::config::CliConfig;
use crate::error::{bad_input, Classify, CliResult};
use crate::io::{cases_to_jsonl, read_cases, write_json, write_text};

pub fn sample(args: &SampleArgs, config: &CliConfig) -> CliResult<Output> {
    if args.n == 0 {
        return Err(bad_input("--n must be at least 1"));
    }
    let (seed, generated) = seed_or_random(args.seed);
    let cases = sample_uniform(&config.space, args.n, seed).input()?;
    write_text(&args.out, &cases_to_jsonl(&cases))?;
    let json = json!({
        "command": "doe sample",
        "seed": seed,
        "seed_generated": generated,
        "cases": cases.len(),
        "out": args.out,
        "space": config.space,
    });
    let text = format!("wrote {} cases to {} (seed {seed})\n", cases.len(), args.out.display());
    Ok(Output { json, text })
}

pub fn split(args: &SplitArgs, config: &CliConfig) -> CliResult<Output> {
    let cases = read_cases(&args.cases)?;
    let (seed, generated) = seed_or_random(args.seed);
    let peel_mode = match args.peel {
        PeelArg::Auto => None,
        PeelArg::Exact => Some(PeelMode::Exact),
        PeelArg::Approximate => {
            if args.candidates == 0 {
                return Err(bad_input("--candidates must be at least 1"));
            }
            Some(PeelMode::Approximate {
                candidates: args.candidates,
            })
        }
    };
    let split_config = SplitConfig {
        n_ood: args.n_ood,
        n_interp: args.n_interp,
        n_id_random: args.n_id_random,
        n_val: args.n_val,
        seed,
        peel_mode,
    };
    let assignment = peel_split(&cases, &split_config).input()?;
    let manifest = assignment.manifest(seed, Some(config.space));
    write_json(&args.out, &manifest)?;

    let counts = manifest.counts;
    let json = json!({
        "command": "doe split",
        "seed": seed,
        "seed_generated": generated,
        "cases": cases.len(),
        "peel_mode": peel_mode.unwrap_or_else(|| PeelMode::for_size(cases.len())),
        "layers_peeled": assignment.layers_peeled,
        "counts": counts,
        "out": args.out,
    });
    let mut text = format!(
        "wrote {} (seed {seed}, {} hull layers peeled)\n",
        args.out.display(),
        assignment.layers_peeled
    );
    for s in Split::ALL {
        text.push_str(&format!("  {:<20} {}\n", s.as_str(), counts.get(s)));
    }
    Ok(Output { json, text })
}

pub fn scan(args: &ScanArgs) -> CliResult<Output> {
    let alpha = parse_values("alpha", &args.alpha)?;
    let sweep = parse_values("sweep", &args.sweep)?;
    let cases = scan_grid(args.c_r, args.b, args.taper, args.u_inf, &alpha, &sweep).input()?;
    for c in &cases {
        c.design.validate().input_ctx(&c.id)?;
        c.inflow.validate().input_ctx(&c.id)?;
    }
    write_text(&args.out, &cases_to_jsonl(&cases))?;
    let json = json!({
        "command": "doe scan",
        "cases": cases.len(),
        "alpha_values": alpha.len(),
        "sweep_values": sweep.len(),
        "out": args.out,
    });
    let text = format!(
        "wrote {} cases ({} alpha x {} sweep) to {}\n",
        cases.len(),
        alpha.len(),
        sweep.len(),
        args.out.display()
    );
    Ok(Output { json, text })
}
