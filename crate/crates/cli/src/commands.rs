use clap::ValueEnum;
use lamplighter::animal::{counts_by_size, enumerate_animals, residual_from, AnimalRecord};
use lamplighter::eigenbasis::{gram_defect, rooted_eigenfunctions, verify_eigen, EigenRecord};
use lamplighter::percolation::mc_expected_return;
use lamplighter::spectral::mixture;
use lamplighter::walk::{expected_return_animal_sum, return_prob_config_space, return_prob_path_sum, ReturnReport};
use lamplighter::{kernel, LampVector, LamplighterOperator};
use serde::Serialize;
use serde_json::json;

use crate::config::{resolve, size_default, Common};
use crate::error::CliResult;
use crate::output::{print_json, write_json, write_jsonl, write_with};

/// Gram matrices beyond this many vectors are skipped in the summary.
const GRAM_LIMIT: usize = 4000;

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum Method {
    ConfigSpace,
    PathSum,
    AnimalSum,
    Mc,
}

impl Method {
    fn name(self) -> &'static str {
        match self {
            Method::ConfigSpace => "config-space",
            Method::PathSum => "path-sum",
            Method::AnimalSum => "animal-sum",
            Method::Mc => "mc",
        }
    }
}

pub fn animals(common: &Common) -> CliResult<bool> {
    let mut r = resolve(common, "animals", None, |s| size_default(s, 4))?;
    let max = r.config.max_size;
    let g = r.materialize(max + 1)?;
    let cfg = &r.config;
    let p = cfg.probability();
    let animals = enumerate_animals(&g, g.root(), max)?;
    let records: Vec<AnimalRecord> = animals.iter().map(|a| AnimalRecord::new(&g, a, p)).collect();
    let residual = residual_from(&g, p, &animals)?;
    let summary = json!({
        "config": cfg,
        "animals": animals.len(),
        "counts_by_size": counts_by_size(&animals, max),
        "residual": residual,
        "residual_exact": residual.exact.as_ref().map(ToString::to_string),
    });
    write_jsonl(cfg, "animals.jsonl", &records)?;
    write_json(cfg, "animals-summary.json", &summary)?;
    println!("{}", serde_json::to_string(&summary)?);
    Ok(true)
}

pub fn moments(common: &Common, method: Method) -> CliResult<bool> {
    let mut r = resolve(common, "moments", None, |s| size_default(s, 8))?;
    r.config.method = Some(method.name().to_string());
    let half = r.config.n_max as usize / 2;
    let radius = match method {
        Method::AnimalSum => r.config.max_size.max(half) + 1,
        _ => half + 1,
    };
    let g = r.materialize(radius)?;
    let cfg = &r.config;
    let k = kernel(&g)?;
    let root = g.root();
    let (values, reports): (Vec<f64>, serde_json::Value) = match method {
        Method::Mc => {
            let est = (0..=cfg.n_max)
                .map(|n| mc_expected_return(&k, root, cfg.p_value, n, cfg.samples, cfg.seed))
                .collect::<lamplighter::Result<Vec<_>>>()?;
            (est.iter().map(|e| e.estimate).collect(), serde_json::to_value(&est)?)
        }
        _ => {
            let a = cfg.arithmetic();
            let reps = (0..=cfg.n_max)
                .map(|n| {
                    let (v, m) = match method {
                        Method::ConfigSpace => (return_prob_config_space(&k, root, cfg.m, n, a)?, Some(cfg.m)),
                        Method::PathSum => (return_prob_path_sum(&k, root, cfg.m, n, a)?, Some(cfg.m)),
                        _ => (
                            expected_return_animal_sum(&k, root, cfg.probability(), n, cfg.max_size, a)?,
                            None,
                        ),
                    };
                    Ok(ReturnReport::new(method.name(), n, m, &v))
                })
                .collect::<lamplighter::Result<Vec<_>>>()?;
            (reps.iter().map(|r| r.value).collect(), serde_json::to_value(&reps)?)
        }
    };
    let doc = json!({ "config": cfg, "method": method.name(), "values": values, "reports": reports });
    write_json(cfg, &format!("moments-{}.json", method.name()), &doc)?;
    print_json(&doc)?;
    Ok(true)
}

pub fn spectrum(common: &Common) -> CliResult<bool> {
    let mut r = resolve(common, "spectrum", None, |s| size_default(s, 8))?;
    let g = r.materialize(r.config.max_size + 1)?;
    let cfg = &r.config;
    let k = kernel(&g)?;
    let mix = mixture(&k, g.root(), cfg.probability(), cfg.max_size, cfg.merge_tol)?;
    let header: Vec<(String, String)> = [
        ("config", serde_json::to_string(cfg)?),
        ("p", cfg.p.clone()),
        ("root", cfg.root.clone()),
        ("max_size", cfg.max_size.to_string()),
        ("animals", mix.animals.to_string()),
        ("residual", format!("{:.17e}", mix.residual.value)),
    ]
    .into_iter()
    .map(|(k, v)| (k.to_string(), v))
    .collect();
    let measure = &mix.measure;
    let files = [
        write_with(cfg, "spectrum.csv", |w| measure.write_csv(w, &header))?,
        write_with(cfg, "spectrum-cdf.csv", |w| measure.write_cdf_csv(w, &header))?,
    ];
    print_json(&json!({
        "config": cfg,
        "atoms": measure.atoms().len(),
        "total_mass": measure.total_mass(),
        "residual": mix.residual,
        "files": files.iter().map(|p| p.display().to_string()).collect::<Vec<_>>(),
    }))?;
    Ok(true)
}

pub fn eigenbasis(common: &Common) -> CliResult<bool> {
    let mut r = resolve(common, "eigenbasis", None, |_| 3)?;
    let g = r.materialize(r.config.max_size + 1)?;
    let cfg = &r.config;
    let k = kernel(&g)?;
    let op = LamplighterOperator::symmetric(&k, cfg.m)?;
    let efs = rooted_eigenfunctions(&k, g.root(), cfg.m, cfg.max_size)?;
    let records: Vec<EigenRecord> = efs
        .iter()
        .map(|ef| EigenRecord::new(&g, ef, verify_eigen(ef, &op)))
        .collect();
    let max_residual = records.iter().map(|r| r.residual).fold(0.0, f64::max);
    let gram = (efs.len() <= GRAM_LIMIT).then(|| {
        let vectors: Vec<LampVector> = efs.iter().map(|e| e.vector.clone()).collect();
        gram_defect(&vectors)
    });
    write_jsonl(cfg, "eigenbasis.jsonl", &records)?;
    print_json(&json!({
        "config": cfg,
        "eigenfunctions": records.len(),
        "max_residual": max_residual,
        "gram_defect": gram,
    }))?;
    Ok(true)
}
