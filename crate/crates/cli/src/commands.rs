use std::fs::File;
use std::io::{BufReader, BufWriter, Write};
use std::path::Path;

use plp_core::deconv::cutoff_rank;
use plp_core::experiments::{
    condition_surface, consistency_experiment, cutoff_surface, method_weights, weight_panorama,
    AlphaRule, ExperimentSource, MethodParams, ScheduleStrategy,
};
use plp_core::io;
use plp_core::phantom::{generate, PhantomConfig};
use plp_core::{
    build_convolution_matrix, build_uniform_grid, compute_svd, exact_inverse, fit_pca, fpc_map,
    gamma_aif, perfusion_params, recover_residual, tikhonov_inverse, tsvd_inverse, AifCurve,
    Constraint, Execution, GammaAifParams, InverseMatrix, MethodTag, PixelSeriesMatrix, PlpError,
    Result, TikhonovConfig, TsvdConfig,
};

use crate::args::*;

fn usage(msg: impl Into<String>) -> PlpError {
    PlpError::InvalidArgument(msg.into())
}

fn open(path: &Path) -> Result<BufReader<File>> {
    File::open(path)
        .map(BufReader::new)
        .map_err(|e| PlpError::Io(io_context(e, path)))
}

fn io_context(e: std::io::Error, path: &Path) -> std::io::Error {
    std::io::Error::new(e.kind(), format!("{}: {e}", path.display()))
}

/// Runs `f` against the named file, or standard output for `-`.
fn emit(target: &str, f: impl FnOnce(&mut dyn Write) -> Result<()>) -> Result<()> {
    if target == "-" {
        let stdout = std::io::stdout();
        let mut w = BufWriter::new(stdout.lock());
        f(&mut w)?;
        w.flush()?;
    } else {
        let file = File::create(target).map_err(|e| PlpError::Io(io_context(e, Path::new(target))))?;
        let mut w = BufWriter::new(file);
        f(&mut w)?;
        w.flush()?;
    }
    Ok(())
}

fn load_aif(source: &AifSource) -> Result<AifCurve> {
    match &source.aif {
        Some(path) => io::read_aif(open(path)?),
        None => {
            let g = &source.gamma;
            let grid = build_uniform_grid(g.n, g.d)?;
            gamma_aif(GammaAifParams::new(g.a, g.b)?, &grid)
        }
    }
}

fn load_data(data: &DataArgs, step: f64) -> Result<PixelSeriesMatrix> {
    let path = data.data.as_ref().ok_or_else(|| usage("--data is required"))?;
    io::read_pixel_series(open(path)?, Some(step))
}

fn method_params(o: &MethodOptions) -> MethodParams {
    MethodParams {
        tsvd: o.rank.map_or(TsvdConfig::Fraction(o.cutoff), TsvdConfig::Rank),
        alpha: o.alpha.map_or(AlphaRule::CutoffSingularValue(o.cutoff), AlphaRule::Fixed),
        constraint: match o.constraint {
            ConstraintArg::Identity => Constraint::Identity,
            ConstraintArg::Difference => Constraint::FirstDifference,
        },
        basis_size: o.basis_size,
        basis_convolved: o.basis_kind == BasisKindArg::Convolved,
        tail_fraction: o.tail,
    }
}

fn family_tags(family: MethodFamily, basis: BasisKindArg) -> Vec<MethodTag> {
    match family {
        MethodFamily::Tsvd => vec![MethodTag::TsvdVolume, MethodTag::TsvdFlow],
        MethodFamily::Tikhonov => vec![MethodTag::TikhonovVolume, MethodTag::TikhonovFlow],
        MethodFamily::Exact => vec![MethodTag::ExactVolume, MethodTag::ExactFlow],
        MethodFamily::Axel => vec![MethodTag::AxelVolume, MethodTag::AxelMtt],
        MethodFamily::Patlak => vec![MethodTag::PatlakVr, MethodTag::PatlakPerm],
        MethodFamily::Basis => match basis {
            BasisKindArg::Direct => vec![MethodTag::BasisVolume, MethodTag::BasisMtt],
            BasisKindArg::Convolved => vec![MethodTag::BasisVolume, MethodTag::BasisFlow],
        },
        MethodFamily::Fpc => vec![MethodTag::Fpc],
    }
}

/// A method tag, or a family name standing for its volume-type vector.
fn parse_method(s: &str) -> Result<MethodTag> {
    let alias = match s {
        "tsvd" => Some(MethodTag::TsvdVolume),
        "tikhonov" => Some(MethodTag::TikhonovVolume),
        "exact" => Some(MethodTag::ExactVolume),
        "axel" => Some(MethodTag::AxelVolume),
        "patlak" => Some(MethodTag::PatlakVr),
        "basis" => Some(MethodTag::BasisVolume),
        _ => None,
    };
    match alias {
        Some(tag) => Ok(tag),
        None => s.parse().map_err(|_| usage(format!("--method: unknown method '{s}'"))),
    }
}

fn experiment_source(
    tag: MethodTag,
    source: &AifSource,
    data: &DataArgs,
) -> Result<ExperimentSource> {
    if tag == MethodTag::Fpc {
        Ok(ExperimentSource {
            aif: None,
            data: Some(load_data(data, source.gamma.d)?),
        })
    } else {
        Ok(ExperimentSource {
            aif: Some(load_aif(source)?),
            data: None,
        })
    }
}

/// `start:stop:count` (inclusive, evenly spaced) or a comma list.
pub fn parse_values(flag: &str, s: &str) -> Result<Vec<f64>> {
    let bad = || usage(format!("--{flag}: cannot parse '{s}'"));
    let num = |v: &str| v.trim().parse::<f64>().map_err(|_| bad());
    let values = if let [start, stop, count] = s.split(':').collect::<Vec<_>>()[..] {
        let (start, stop) = (num(start)?, num(stop)?);
        let count: usize = count.trim().parse().map_err(|_| bad())?;
        match count {
            0 => return Err(usage(format!("--{flag}: count must be positive"))),
            1 => vec![start],
            _ => (0..count)
                .map(|i| start + (stop - start) * i as f64 / (count - 1) as f64)
                .collect(),
        }
    } else {
        s.split(',').map(num).collect::<Result<Vec<_>>>()?
    };
    if values.is_empty() {
        return Err(bad());
    }
    Ok(values)
}

pub fn run(command: Command) -> Result<()> {
    match command {
        Command::Aif { action: AifAction::Gen { gamma, output } } => {
            let aif = load_aif(&AifSource { aif: None, gamma })?;
            emit(&output, |w| io::write_aif(w, &aif))
        }
        Command::Weights(args) => {
            let params = method_params(&args.options);
            let tags = family_tags(args.method, args.options.basis_kind);
            let source = experiment_source(tags[0], &args.source, &args.data)?;
            let vectors = tags
                .iter()
                .map(|&t| method_weights(t, &params, &source))
                .collect::<Result<Vec<_>>>()?;
            emit(&args.output, |w| io::write_weights(w, &vectors))?;
            if let Some(path) = &args.metrics {
                let metrics = io::weight_metrics(&vectors, args.options.tail)?;
                emit(path, |w| io::write_json(w, &metrics))?;
            }
            Ok(())
        }
        Command::Surface(args) => {
            let a = parse_values("a-values", &args.a_values)?;
            let b = parse_values("b-values", &args.b_values)?;
            let surface = match args.kind {
                SurfaceKindArg::Cond => condition_surface(&a, &b, args.n)?,
                SurfaceKindArg::Cutoff => cutoff_surface(&a, &b, args.n, args.cutoff)?,
            };
            emit(&args.output, |w| io::write_surface(w, &surface))
        }
        Command::Panorama(args) => {
            let aif = load_aif(&args.source)?;
            let entries = weight_panorama(&aif, &args.ranks)?;
            emit(&args.output, |w| io::write_panorama(w, &entries))
        }
        Command::Phantom { action: PhantomAction::Gen { spec, output, truth, seed } } => {
            let mut config: PhantomConfig = serde_json::from_reader(open(&spec)?)
                .map_err(|e| PlpError::Parse(format!("{}: {e}", spec.display())))?;
            if let Some(seed) = seed {
                config.seed = seed;
            }
            let phantom = generate(&config.build()?)?;
            emit(&output, |w| io::write_pixel_series(w, &phantom.data))?;
            if let Some(path) = truth {
                emit(&path, |w| io::write_ground_truth(w, &phantom.truth))?;
            }
            Ok(())
        }
        Command::Map { action: MapAction::Fpc { data, d, mask, output } } => {
            let mut pixels = load_data(&data, d)?;
            if let Some(path) = mask {
                pixels = pixels.with_mask(io::read_mask(open(&path)?)?)?;
            }
            let pca = fit_pca(&pixels)?;
            let map = fpc_map(&pixels, &pca)?;
            emit(&output, |w| io::write_map(w, &map))
        }
        Command::Schedule(args) => {
            let tag = parse_method(&args.method)?;
            let strategies = args
                .strategies
                .iter()
                .map(|s| s.parse::<ScheduleStrategy>())
                .collect::<Result<Vec<_>>>()?;
            let source = experiment_source(tag, &args.source, &args.data)?;
            let report = consistency_experiment(tag, &method_params(&args.options), &source, &strategies)?;
            emit(&args.output, |w| io::write_json(w, &io::report_rows(&report)))
        }
        Command::Recover(args) => {
            let aif = load_aif(&args.source)?;
            let data = load_data(&args.data, args.source.gamma.d)?;
            if data.grid() != aif.grid() {
                return Err(usage("--data and the AIF are sampled on different grids"));
            }
            let inverse = recover_inverse(&aif, &args)?;
            let results = Execution::default().try_map_indexed(data.pixel_count(), |p| {
                let r = recover_residual(&inverse, &data.row(p))?;
                Ok::<_, PlpError>((perfusion_params(&r, data.grid())?, r))
            })?;
            emit(&args.output, |w| io::write_recovered(w, &results))
        }
    }
}

fn recover_inverse(aif: &AifCurve, args: &RecoverArgs) -> Result<InverseMatrix> {
    let m = build_convolution_matrix(aif, aif.grid())?;
    let params = method_params(&args.options);
    match args.method {
        RecoverMethod::Exact => exact_inverse(m.entries()),
        RecoverMethod::Tsvd => tsvd_inverse(&compute_svd(m.entries())?, params.tsvd),
        RecoverMethod::Tikhonov => {
            let alpha = match params.alpha {
                AlphaRule::Fixed(a) => a,
                AlphaRule::CutoffSingularValue(f) => {
                    let s = compute_svd(m.entries())?.singular_values;
                    s[cutoff_rank(&s, f)? - 1]
                }
            };
            tikhonov_inverse(m.entries(), TikhonovConfig { alpha, constraint: params.constraint })
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn value_lists() {
        assert_eq!(parse_values("a", "0,0.5,1").unwrap(), vec![0.0, 0.5, 1.0]);
        assert_eq!(parse_values("a", "0:1:3").unwrap(), vec![0.0, 0.5, 1.0]);
        assert_eq!(parse_values("a", "2:9:1").unwrap(), vec![2.0]);
        assert!(parse_values("a", "0:1:0").is_err());
        assert!(parse_values("a", "x").is_err());
    }

    #[test]
    fn method_aliases() {
        assert_eq!(parse_method("tsvd").unwrap(), MethodTag::TsvdVolume);
        assert_eq!(parse_method("patlak-perm").unwrap(), MethodTag::PatlakPerm);
        assert!(parse_method("nope").is_err());
    }
}
