use std::path::Path;

use rdlimit::context::ContextModelSpec;
use rdlimit::correlation::{rate_correlated, rate_independent, CorrelatedPair};
use rdlimit::gaussian_rd::{log_variance_grid, rate_gap_curve, UNIFORM_NOISE_DISTORTION};
use rdlimit::io::table::{Table, CHANNEL_VERIFY_HEADER, CORRELATION_HEADER, WATERFILL_HEADER};
use rdlimit::io::{
    decode_container, encode_container, generate_source, load_image, parse_budget_list, parse_size,
    write_table, ContainerPayload, SyntheticSourceSpec,
};
use rdlimit::pipeline::{component_ablation_multi, prepare, run_batch, PipelineConfig, Quantizer};
use rdlimit::test_channel::{
    mc_mutual_information, sample_variance, simulate_channel, ChannelParams,
};
use rdlimit::transforms::{fit_klt, ImagePlane, TransformKind, TransformSpec};
use rdlimit::waterfill::{reverse_water_fill, SourceSpec, DEFAULT_TOLERANCE};
use rdlimit::{Error, Result};
use serde_json::json;

use crate::args::*;
use crate::manifest::Manifest;

pub fn run(cli: &Cli) -> Result<()> {
    match &cli.command {
        Command::GapCurve(a) => gap_curve(a),
        Command::Waterfill(a) => waterfill(a),
        Command::ChannelVerify(a) => channel_verify(a),
        Command::Correlation(a) => correlation(a),
        Command::RdSweep(a) => sweep(a, false),
        Command::Ablation(a) => sweep(a, true),
    }
}

fn finish(table: &Table, manifest: Manifest) -> Result<()> {
    write_table(table, &manifest.output_path)?;
    manifest.write()
}

fn gap_curve(a: &GapCurveArgs) -> Result<()> {
    let distortion = a.distortion.unwrap_or(UNIFORM_NOISE_DISTORTION);
    let grid = log_variance_grid(a.min_variance, a.max_variance, a.points)?;
    let table = Table::gap_curve(&rate_gap_curve(&grid, distortion)?)?;
    finish(
        &table,
        Manifest {
            command: "gap-curve",
            parameters: json!({
                "distortion": distortion,
                "min_variance": a.min_variance,
                "max_variance": a.max_variance,
                "points": a.points,
            }),
            input_paths: vec![],
            output_path: a.out.output.clone(),
            seed: 0,
        },
    )
}

fn waterfill(a: &WaterfillArgs) -> Result<()> {
    let sources = SourceSpec::new(a.variances.clone())?;
    let alloc = reverse_water_fill(&sources, a.budget, DEFAULT_TOLERANCE)?;
    let rates = alloc.rates(&sources);
    let mut table = Table::new(WATERFILL_HEADER);
    for (i, ((&v, &d), &r)) in a
        .variances
        .iter()
        .zip(&alloc.distortions)
        .zip(&rates)
        .enumerate()
    {
        let mut row = vec![i.to_string()];
        row.extend([v, d, r].map(rdlimit::io::format_float));
        table.push(row)?;
    }
    finish(
        &table,
        Manifest {
            command: "waterfill",
            parameters: json!({
                "variances": a.variances,
                "budget": a.budget,
                "water_level": alloc.water_level,
                "total_rate_bits": alloc.total_rate,
            }),
            input_paths: vec![],
            output_path: a.out.output.clone(),
            seed: 0,
        },
    )
}

fn channel_verify(a: &ChannelVerifyArgs) -> Result<()> {
    let params = ChannelParams::new(a.variance, a.distortion)?;
    let mi = mc_mutual_information(a.variance, a.distortion, a.samples, a.seed)?;
    let closed = rdlimit::gaussian_rd::rate_gaussian(a.variance, a.distortion)?;
    let out = sample_variance(&simulate_channel(params, a.samples, a.seed).outputs)?;
    let expected_var = if params.is_suppressed() {
        0.0
    } else {
        a.variance
    };
    let z = if mi.std_error > 0.0 {
        mi.z_score(closed)
    } else {
        0.0
    };
    let mut table = Table::new(CHANNEL_VERIFY_HEADER);
    table.push(vec![
        rdlimit::io::format_float(a.variance),
        rdlimit::io::format_float(a.distortion),
        a.samples.to_string(),
        rdlimit::io::format_float(mi.bits),
        rdlimit::io::format_float(mi.std_error),
        rdlimit::io::format_float(closed),
        rdlimit::io::format_float(z),
        rdlimit::io::format_float(out.value),
        rdlimit::io::format_float(expected_var),
    ])?;
    finish(
        &table,
        Manifest {
            command: "channel-verify",
            parameters: json!({
                "variance": a.variance,
                "distortion": a.distortion,
                "samples": a.samples,
            }),
            input_paths: vec![],
            output_path: a.out.output.clone(),
            seed: a.seed,
        },
    )
}

fn correlation(a: &CorrelationArgs) -> Result<()> {
    let mut table = Table::new(CORRELATION_HEADER);
    for &rho in &a.rho {
        let pair = CorrelatedPair::new(a.variance, rho, a.distortion)?;
        let ind = rate_independent(&pair);
        let cor = rate_correlated(&pair)?;
        table.push_floats(&[a.variance, rho, a.distortion, ind, cor, ind - cor])?;
    }
    finish(
        &table,
        Manifest {
            command: "correlation",
            parameters: json!({
                "variance": a.variance,
                "distortion": a.distortion,
                "rho": a.rho,
            }),
            input_paths: vec![],
            output_path: a.out.output.clone(),
            seed: 0,
        },
    )
}

fn load_inputs(a: &SweepArgs) -> Result<Vec<ImagePlane>> {
    match a.synthetic {
        Some(kind) => {
            let (w, h) = parse_size(&a.size)?;
            let spec = match kind {
                SyntheticArg::Iid => SyntheticSourceSpec::iid_gaussian(w, h, a.variance, a.seed),
                SyntheticArg::Ar1 => {
                    SyntheticSourceSpec::ar1_field(w, h, a.variance, a.ar_coeff, a.seed)
                }
            };
            Ok(vec![generate_source(&spec)?])
        }
        None if a.input.is_empty() => Err(Error::InvalidArgument(
            "give --input files or --synthetic".into(),
        )),
        None => a.input.iter().map(load_image).collect(),
    }
}

fn transform_spec(a: &SweepArgs, images: &[ImagePlane]) -> Result<TransformSpec> {
    match a.transform {
        TransformArg::Identity => Ok(TransformSpec::identity()),
        TransformArg::Dct => TransformSpec::dct(a.block_size),
        TransformArg::Klt => match &a.klt_basis {
            Some(path) => {
                let bytes = std::fs::read(path).map_err(|source| Error::Io {
                    path: path.clone(),
                    source,
                })?;
                match decode_container(&bytes)? {
                    ContainerPayload::Klt(spec) => Ok(spec),
                    ContainerPayload::Context(_) => Err(Error::UnsupportedFormat(format!(
                        "{} holds a context model, not a KLT basis",
                        path.display()
                    ))),
                }
            }
            None => Ok(fit_klt(images, a.block_size)?.spec),
        },
    }
}

fn save(payload: &ContainerPayload, path: &Path) -> Result<()> {
    std::fs::write(path, encode_container(payload)?).map_err(|source| Error::Io {
        path: path.to_path_buf(),
        source,
    })
}

fn sweep(a: &SweepArgs, ablation: bool) -> Result<()> {
    let budgets = match (&a.budget, &a.budget_sweep) {
        (Some(b), None) => vec![*b],
        (None, Some(list)) => parse_budget_list(list)?,
        _ => {
            return Err(Error::InvalidArgument(
                "give --budget or --budget-sweep".into(),
            ))
        }
    };
    let images = load_inputs(a)?;
    let transform = transform_spec(a, &images)?;
    if a.klt_basis.is_some() && a.transform != TransformArg::Klt {
        return Err(Error::InvalidArgument(
            "--klt-basis needs --transform klt".into(),
        ));
    }
    let context = match a.context {
        ContextArg::None => ContextModelSpec::none(),
        ContextArg::Avg => ContextModelSpec::causal_average(),
        ContextArg::Lsq => ContextModelSpec::causal_lsq(),
    };
    let quantizer = match a.quantizer {
        QuantizerArg::TestChannel => Quantizer::TestChannel,
        QuantizerArg::Uniform => Quantizer::Uniform,
    };
    let config = PipelineConfig::new(transform.clone(), budgets[0])
        .with_budgets(budgets.clone())
        .with_context(context)
        .with_quantizer(quantizer)
        .with_seed(a.seed);
    config.validate()?;

    if let Some(path) = &a.save_klt {
        if transform.kind() != TransformKind::Klt {
            return Err(Error::InvalidArgument(
                "--save-klt needs --transform klt".into(),
            ));
        }
        save(&ContainerPayload::Klt(transform.clone()), path)?;
    }
    if let Some(path) = &a.save_context {
        let fitted = prepare(&images[0], &config)?.context().clone();
        save(&ContainerPayload::Context(fitted), path)?;
    }

    let table = if ablation {
        let result = component_ablation_multi(&images, &config)?;
        let arms: Vec<(&str, &rdlimit::pipeline::RDCurve)> = result
            .entries
            .iter()
            .map(|(arm, c)| (arm.name(), c))
            .collect();
        Table::ablation(&arms)?
    } else {
        Table::rd_curve(&run_batch(&images, &config)?)?
    };

    let (source, seed_note) = match a.synthetic {
        Some(kind) => (
            json!({
                "synthetic": match kind { SyntheticArg::Iid => "iid", SyntheticArg::Ar1 => "ar1" },
                "size": a.size,
                "variance": a.variance,
                "ar_coeff": a.ar_coeff,
            }),
            "field and channel noise",
        ),
        None => (json!({ "files": a.input }), "channel noise"),
    };
    finish(
        &table,
        Manifest {
            command: if ablation { "ablation" } else { "rd-sweep" },
            parameters: json!({
                "source": source,
                "transform": transform.kind().name(),
                "block_size": transform.block_size(),
                "klt_basis": a.klt_basis,
                "context": config.context.kind().name(),
                "quantizer": quantizer.name(),
                "variance_model": config.variance_model.name(),
                "budgets": budgets,
                "variance_floor": config.variance_floor,
                "seed_drives": seed_note,
                "config_digest": config.digest(),
            }),
            input_paths: a.input.clone(),
            output_path: a.out.output.clone(),
            seed: a.seed,
        },
    )
}
