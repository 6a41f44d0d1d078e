use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};

use exactbn::explore::{
    ess_sweep, fit_expected, predict_logp, rotations, sample, swaps, Transform, SAMPLER_RNG,
};
use exactbn::local_scores::{merge_shards, read_cache_header, ShardScores};
use exactbn::optimizer::{learn_from_parents, load_sinks, ordering_from_sinks};
use exactbn::output::{default_names, parse_names, to_dot, NetworkDoc};
use exactbn::{
    compute_all, AnyStore, BestParents, ComputeOptions, Dataset, Error, LocalScoreStore, Network,
    Ordering, Result, ScoreKind, ScoreSpec, ScoreValue, SinkTables,
};

use crate::{
    cache_path, BestOrderArgs, Command, DataArgs, LearnArgs, MergeArgs, NetForOrderArgs,
    NetworkOutArgs, PredictArgs, ReportArgs, RotationsArgs, SampleArgs, ScanArgs, ScoreArgs,
    ScoresArgs, SourceArgs, SweepArgs,
};

macro_rules! with_store {
    ($store:expr, $s:ident => $body:expr) => {
        match $store {
            AnyStore::Single($s) => $body,
            AnyStore::Double($s) => $body,
        }
    };
}

pub(crate) fn run(command: Command) -> Result<()> {
    match command {
        Command::Scores(a) => scores(a),
        Command::Merge(a) => merge(a),
        Command::Learn(a) => learn(a),
        Command::BestOrder(a) => best_order(a),
        Command::NetForOrder(a) => net_for_order(a),
        Command::Rotations(a) => scan_rotations(a),
        Command::Swaps(a) => scan_swaps(a),
        Command::SweepEss(a) => sweep(a),
        Command::Sample(a) => draw(a),
        Command::Predict(a) => predict(a),
        Command::Report(a) => report(a),
    }
}

fn load_data(path: &Path, args: &DataArgs) -> Result<Dataset> {
    let data = Dataset::load(path)?;
    match &args.arities {
        Some(arities) => data.with_arities(arities.clone()),
        None => Ok(data),
    }
}

fn score_spec(args: &ScoreArgs) -> Result<ScoreSpec> {
    match (args.score.unwrap_or(ScoreKind::Bde), args.ess) {
        (ScoreKind::Bde, ess) => ScoreSpec::bde(ess.unwrap_or(ScoreSpec::DEFAULT_ESS)),
        (_, Some(_)) => Err(Error::InvalidArgument("--ess applies to bde only".into())),
        (kind, None) => ScoreSpec::new(kind, ScoreSpec::DEFAULT_ESS),
    }
}

fn compute_opts(jobs: Option<usize>) -> Result<ComputeOptions> {
    if jobs == Some(0) {
        return Err(Error::InvalidArgument("--jobs must be at least 1".into()));
    }
    Ok(ComputeOptions { jobs })
}

fn compute_store(
    data: &Dataset,
    spec: &ScoreSpec,
    precision: u8,
    opts: &ComputeOptions,
) -> Result<AnyStore> {
    Ok(match precision {
        8 => AnyStore::Double(compute_all(data, spec, opts)?),
        _ => AnyStore::Single(compute_all(data, spec, opts)?),
    })
}

fn store_precision(store: &AnyStore) -> u8 {
    match store {
        AnyStore::Single(_) => 4,
        AnyStore::Double(_) => 8,
    }
}

/// Loads `--cache` when given, checking any explicit flags against it;
/// otherwise scores the data file.
fn load_store(src: &SourceArgs) -> Result<AnyStore> {
    let opts = compute_opts(src.score.jobs)?;
    let Some(cache) = &src.cache else {
        let path = src
            .data
            .as_ref()
            .ok_or_else(|| Error::InvalidArgument("a data file or --cache is required".into()))?;
        let data = load_data(path, &src.data_args)?;
        let spec = score_spec(&src.score)?;
        return compute_store(&data, &spec, src.score.precision.unwrap_or(4), &opts);
    };
    let store = AnyStore::load(cache_path(cache))?;
    let mismatch = |what: &str| {
        Err(Error::HeaderMismatch(format!(
            "{what} differs from the cache"
        )))
    };
    let spec = store.spec();
    if src.score.score.is_some_and(|k| k != spec.kind) {
        return mismatch("--score");
    }
    if src
        .score
        .ess
        .is_some_and(|e| spec.kind != ScoreKind::Bde || e != spec.ess)
    {
        return mismatch("--ess");
    }
    if src
        .score
        .precision
        .is_some_and(|p| p != store_precision(&store))
    {
        return mismatch("--precision");
    }
    if let Some(path) = &src.data {
        if load_data(path, &src.data_args)?.arities() != store.arities() {
            return mismatch("data arities");
        }
    }
    Ok(store)
}

fn write_output(path: Option<&Path>, text: &str) -> Result<()> {
    match path {
        Some(p) => fs::write(p, text).map_err(|e| io_error(p, e)),
        None => {
            let mut out = std::io::stdout().lock();
            out.write_all(text.as_bytes())
                .and_then(|_| out.flush())
                .map_err(|e| io_error(Path::new("<stdout>"), e))
        }
    }
}

fn io_error(path: &Path, source: std::io::Error) -> Error {
    Error::Io {
        path: path.to_path_buf(),
        source,
    }
}

fn csv_text(header: &[&str], rows: impl IntoIterator<Item = Vec<String>>) -> Result<String> {
    let mut w = csv::Writer::from_writer(Vec::new());
    let fail = |e: csv::Error| Error::Data(format!("csv: {e}"));
    w.write_record(header).map_err(fail)?;
    for row in rows {
        w.write_record(&row).map_err(fail)?;
    }
    let bytes = w
        .into_inner()
        .map_err(|e| Error::Data(format!("csv: {e}")))?;
    Ok(String::from_utf8(bytes).expect("csv output is utf-8"))
}

fn names_for(path: Option<&PathBuf>, n: usize) -> Result<Vec<String>> {
    match path {
        Some(p) => {
            let text = fs::read_to_string(p).map_err(|e| io_error(p, e))?;
            parse_names(&text, n)
        }
        None => Ok(default_names(n)),
    }
}

fn emit_network(
    out: &NetworkOutArgs,
    spec: &ScoreSpec,
    total: f64,
    ord: &Ordering,
    net: &Network,
) -> Result<()> {
    let names = names_for(out.names.as_ref(), net.n())?;
    let doc = NetworkDoc::new(*spec, total, ord, net, &names);
    write_output(out.out.as_deref(), &(doc.to_json() + "\n"))?;
    if let Some(dot) = &out.dot {
        fs::write(dot, to_dot(net, &names)).map_err(|e| io_error(dot, e))?;
    }
    Ok(())
}

fn parse_order(text: &str) -> Result<Ordering> {
    text.parse()
}

fn scores(a: ScoresArgs) -> Result<()> {
    let data = load_data(&a.data, &a.data_args)?;
    let spec = score_spec(&a.score)?;
    let opts = compute_opts(a.score.jobs)?;
    let precision = a.score.precision.unwrap_or(4);
    let stem = a
        .data
        .file_stem()
        .map_or_else(|| "scores".into(), |s| s.to_string_lossy().into_owned());
    match a.shard {
        Some(shard) => {
            let out = cache_path(&a.out.unwrap_or_else(|| {
                PathBuf::from(format!("{stem}.{}-of-{}.bnsh", shard.index, shard.count))
            }));
            match precision {
                8 => ShardScores::<f64>::compute(&data, &spec, shard, &opts)?.save(&out),
                _ => ShardScores::<f32>::compute(&data, &spec, shard, &opts)?.save(&out),
            }
        }
        None => {
            let out = cache_path(
                &a.out
                    .unwrap_or_else(|| PathBuf::from(format!("{stem}.bnls"))),
            );
            compute_store(&data, &spec, precision, &opts)?.save(&out)
        }
    }
}

fn merge(a: MergeArgs) -> Result<()> {
    let paths: Vec<PathBuf> = a.shards.iter().map(|p| cache_path(p)).collect();
    let double = read_cache_header(&paths[0])?.precision == exactbn::Precision::Double;
    let out = cache_path(&a.out);
    if double {
        let shards = paths
            .iter()
            .map(ShardScores::<f64>::load)
            .collect::<Result<Vec<_>>>()?;
        merge_shards(&shards)?.save(&out)
    } else {
        let shards = paths
            .iter()
            .map(ShardScores::<f32>::load)
            .collect::<Result<Vec<_>>>()?;
        merge_shards(&shards)?.save(&out)
    }
}

fn learn(a: LearnArgs) -> Result<()> {
    let store = load_store(&a.source)?;
    with_store!(&store, s => learn_with(s, &a))
}

fn learn_with<S: ScoreValue>(store: &LocalScoreStore<S>, a: &LearnArgs) -> Result<()> {
    let bp = BestParents::compute(store, &compute_opts(a.source.score.jobs)?)?;
    let best = learn_from_parents(&bp)?;
    if let Some(path) = &a.save_parents {
        bp.save(cache_path(path))?;
    }
    if let Some(path) = &a.save_sinks {
        SinkTables::compute(&bp)?.save_sinks(cache_path(path))?;
    }
    emit_network(
        &a.output,
        store.spec(),
        best.total_score.to_f64(),
        &best.ordering,
        &best.network,
    )
}

fn best_order(a: BestOrderArgs) -> Result<()> {
    if let Some(path) = &a.sinks {
        let (header, sinks) = load_sinks(cache_path(path))?;
        let ord = ordering_from_sinks(header.n(), &sinks)?;
        return write_output(None, &format!("{ord}\n"));
    }
    let store = load_store(&a.source)?;
    let opts = compute_opts(a.source.score.jobs)?;
    let (ord, total) = with_store!(&store, s => {
        let best = learn_from_parents(&BestParents::compute(s, &opts)?)?;
        (best.ordering, best.total_score.to_f64())
    });
    write_output(None, &format!("{ord}\n{total}\n"))
}

fn net_for_order(a: NetForOrderArgs) -> Result<()> {
    let ord = parse_order(&a.order)?;
    let store = load_store(&a.source)?;
    let opts = compute_opts(a.source.score.jobs)?;
    let (net, total) = with_store!(&store, s => {
        let bp = match &a.parents {
            Some(path) => BestParents::load(cache_path(path), s)?,
            None => BestParents::compute(s, &opts)?,
        };
        let (net, total) = bp.network_for(&ord)?;
        (net, total.to_f64())
    });
    emit_network(&a.output, store.spec(), total, &ord, &net)
}

/// Parent table and base ordering shared by the scan commands.
fn scan_setup<S: ScoreValue>(
    store: &LocalScoreStore<S>,
    a: &ScanArgs,
) -> Result<(BestParents<S>, Ordering)> {
    let bp = BestParents::compute(store, &compute_opts(a.source.score.jobs)?)?;
    let ord = match &a.order {
        Some(text) => parse_order(text)?,
        None => learn_from_parents(&bp)?.ordering,
    };
    Ok((bp, ord))
}

fn scan_rotations(a: RotationsArgs) -> Result<()> {
    let store = load_store(&a.scan.source)?;
    let rows: Vec<Vec<String>> = with_store!(&store, s => {
        let (bp, ord) = scan_setup(s, &a.scan)?;
        rotations(&ord, &bp, a.max_shift)?
            .entries
            .into_iter()
            .map(|(t, score)| {
                let Transform::Rotation(k) = t else { unreachable!("rotation scan") };
                vec![k.to_string(), score.to_f64().to_string()]
            })
            .collect()
    });
    write_output(a.scan.out.as_deref(), &csv_text(&["k", "score"], rows)?)
}

fn scan_swaps(a: ScanArgs) -> Result<()> {
    let store = load_store(&a.source)?;
    let rows: Vec<Vec<String>> = with_store!(&store, s => {
        let (bp, ord) = scan_setup(s, &a)?;
        let matrix = swaps(&ord, &bp)?.swap_matrix();
        matrix
            .iter()
            .enumerate()
            .flat_map(|(i, row)| {
                row.iter()
                    .enumerate()
                    .map(move |(j, v)| vec![i.to_string(), j.to_string(), v.to_f64().to_string()])
            })
            .collect()
    });
    write_output(a.out.as_deref(), &csv_text(&["i", "j", "score"], rows)?)
}

fn sweep(a: SweepArgs) -> Result<()> {
    let data = load_data(&a.data, &a.data_args)?;
    let opts = compute_opts(a.jobs)?;
    let rows = match a.precision {
        8 => ess_sweep::<f64>(&data, &a.grid, &opts)?,
        _ => ess_sweep::<f32>(&data, &a.grid, &opts)?,
    };
    let rows = rows
        .into_iter()
        .map(|r| vec![r.ess.to_string(), r.arcs.to_string(), r.score.to_string()]);
    write_output(
        a.out.as_deref(),
        &csv_text(&["ess", "arcs", "score"], rows)?,
    )
}

fn draw(a: SampleArgs) -> Result<()> {
    let net = NetworkDoc::load(&a.network)?.network()?;
    let train = load_data(&a.data, &a.data_args)?;
    let pnet = fit_expected(&net, &train, a.ess)?;
    let rows = sample(&pnet, a.count, a.seed)?;
    let header = [format!("rng: {SAMPLER_RNG}"), format!("seed: {}", a.seed)];
    let mut buf = Vec::new();
    rows.write_text(&mut buf, &header)
        .map_err(|e| io_error(Path::new("<buffer>"), e))?;
    write_output(
        a.out.as_deref(),
        &String::from_utf8(buf).expect("sample text is utf-8"),
    )
}

fn predict(a: PredictArgs) -> Result<()> {
    let net = NetworkDoc::load(&a.network)?.network()?;
    let train = load_data(&a.train, &a.data_args)?;
    let test = Dataset::load(&a.test)?.with_arities(train.arities().to_vec())?;
    let pred = predict_logp(&net, &train, &test, a.ess)?;
    let rows = pred
        .log_probs
        .iter()
        .enumerate()
        .map(|(i, lp)| vec![i.to_string(), lp.to_string()])
        .chain(std::iter::once(vec!["mean".into(), pred.mean.to_string()]));
    write_output(a.out.as_deref(), &csv_text(&["row", "logp"], rows)?)
}

fn report(a: ReportArgs) -> Result<()> {
    let doc = NetworkDoc::load(&a.network)?;
    let net = doc.network()?;
    let mut text = format!("n: {}\n", net.n());
    if let Some(path) = &a.data {
        let data = load_data(path, &a.data_args)?;
        if data.n() != net.n() {
            return Err(Error::Data(format!(
                "data has {} variables, network has {}",
                data.n(),
                net.n()
            )));
        }
        let arities: Vec<String> = data.arities().iter().map(u32::to_string).collect();
        text += &format!("rows: {}\narities: {}\n", data.len(), arities.join(","));
    }
    text += &format!(
        "score: {} ess {}\ntotal score: {}\narcs: {}\nmax in-degree: {}\n",
        doc.score_spec.kind,
        doc.score_spec.ess,
        doc.total_score,
        net.arc_count(),
        net.max_in_degree()
    );
    write_output(None, &text)
}
