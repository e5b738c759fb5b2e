"""
The ``satgen`` command line.

Exit codes: 0 on success, 1 on a domain error (parse failure, infeasible parameters, solver timeout),
2 on a usage or configuration error.
"""
import argparse
import logging
import math
import os
import sys
from pathlib import Path

import pandas as pd

from cli.bench import run_ladder, site_ladder
from cli.config import VERSION, RunConfig, config_defaults, read_config_file
from cli.reports import write_csv, write_jsonl
from generator.genomator import CLUSTER_MODES, GenParams, generate_cohort, records_to_matrix
from hapdata.clusters import build_clusters
from hapdata.formats import FORMATS, HAP, VCF, read_matrix, write_matrix_file
from markov import MarkovModel
from metrics.frequency import frequency_correlation, frequency_table
from metrics.ld import LD_MODES, dosage_matrix, ld_square_error
from metrics.pca import coordinates_table, pca_fit, pca_project
from metrics.wasserstein import sliced_wasserstein
from privacy.attribute import attr_inference_experiment, genomator_handle, markov_handle, sweep_table
from privacy.ktuples import TupleClass, revelation_rates, sample_ktuples
from reverse.exposure import exposure_experiment, exposure_report
from reverse.posterior import theorem1_posterior
from reverse.problem import build_reverse_constraints, sample_candidate_sets
from satcore.solver import SolverOptions
from seeding import derive_seed

logger = logging.getLogger(__name__)

LOG_FORMAT = "%(asctime)s %(levelname)s %(name)s: %(message)s"


def positive_int(text: str) -> int:
    value = int(text)
    if value < 1:
        raise argparse.ArgumentTypeError(f"expected an integer >= 1, got {text}")
    return value


def non_negative_int(text: str) -> int:
    value = int(text)
    if value < 0:
        raise argparse.ArgumentTypeError(f"expected an integer >= 0, got {text}")
    return value


def non_negative_float(text: str) -> float:
    value = float(text)
    if not value >= 0:
        raise argparse.ArgumentTypeError(f"expected a number >= 0, got {text}")
    return value


def token_list(text: str) -> tuple:
    tokens = tuple(t.strip() for t in text.split(",") if t.strip())
    if not tokens:
        raise argparse.ArgumentTypeError("alphabet must list at least one token")
    return tokens


def _common_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--seed", type=int, default=0, help="master seed (default 0)")
    common.add_argument("--threads", type=positive_int, default=os.cpu_count() or 1,
                        help="worker processes (default: available cores)")
    common.add_argument("--format", choices=FORMATS, default=None, help="output format (default: from suffix)")
    common.add_argument("--dump-cnf", type=Path, default=None, help="write generation formulas in DIMACS form")
    common.add_argument("--config", type=Path, default=None, help="'key = value' file; flags override it")
    common.add_argument("--alphabet", type=token_list, default=None,
                        help="comma-separated alphabet shared by every site of HAP input")
    common.add_argument("--report", type=Path, default=None, help="JSONL report path (default: standard output)")
    common.add_argument("--max-conflicts", type=positive_int, default=SolverOptions.max_conflicts,
                        help="solver conflict budget per solve")
    common.add_argument("-v", "--verbose", action="count", default=0, help="-v for info, -vv for debug logs")
    return common


def _leaf(subparsers, name: str, command: str, handler, common, required=(), **kwargs):
    parser = subparsers.add_parser(name, parents=[common], **kwargs)
    parser.set_defaults(_command=command, _handler=handler, _required=tuple(required))
    return parser


def build_parser() -> tuple:
    """
    Returns:
    tuple: (root parser, dict mapping each command such as "audit attr" to its parser)
    """
    common = _common_parser()
    parser = argparse.ArgumentParser(prog="satgen", description="SAT-based synthetic haplotype generation "
                                                               "and privacy auditing.")
    parser.add_argument("--version", action="version", version=VERSION)
    commands = parser.add_subparsers(dest="command", required=True)
    leaves = {}

    gen = _leaf(commands, "gen", "gen", cmd_gen, common, ("input", "output"), help="generate synthetic records")
    gen.add_argument("-i", "--input", type=Path)
    gen.add_argument("-o", "--output", type=Path)
    gen.add_argument("--method", choices=("genomator", "markov"), default="genomator")
    gen.add_argument("--n", type=positive_int, default=10, help="cluster size N")
    gen.add_argument("--z", type=non_negative_float, default=0.0, help="upper end of the Z draw")
    gen.add_argument("--count", type=positive_int, default=1, help="records to generate")
    gen.add_argument("--clusters", type=positive_int, default=None, help="clusters in the plan")
    gen.add_argument("--cluster-mode", choices=CLUSTER_MODES, default="plan")
    gen.add_argument("--diversity", type=non_negative_int, default=None, help="minimum distance between records")
    gen.add_argument("--diverse-from-inputs", action="store_true")
    gen.add_argument("--retry", type=non_negative_int, default=0, help="re-draws of Z on infeasibility")
    gen.add_argument("--window", type=positive_int, default=10, help="Markov window size")
    gen.add_argument("--provenance", type=Path, default=None,
                     help="provenance sidecar (default: <output>.provenance.jsonl)")
    leaves["gen"] = gen

    rev = _leaf(commands, "reverse", "reverse", cmd_reverse, common, ("input", "synth"),
                help="reconstruct the inputs of synthetic records")
    rev.add_argument("-i", "--input", type=Path, help="cohort")
    rev.add_argument("--synth", type=Path, help="synthetic records")
    rev.add_argument("--record", type=non_negative_int, nargs="+", default=[0], help="record columns to audit")
    rev.add_argument("--n", type=positive_int, default=10)
    rev.add_argument("--z", type=non_negative_float, default=0.0)
    rev.add_argument("--trials", type=positive_int, default=100)
    rev.add_argument("--posterior", default=None, help="sample index or id whose exact posterior to add")
    rev.add_argument("--csv", type=Path, default=None, help="per-sample frequency table")
    leaves["reverse"] = rev

    audit = commands.add_parser("audit", help="privacy experiments").add_subparsers(dest="audit_command",
                                                                                 required=True)
    attr = _leaf(audit, "attr", "audit attr", cmd_audit_attr, common, ("input",))
    attr.add_argument("-i", "--input", type=Path)
    attr.add_argument("--method", choices=("genomator", "markov"), default="genomator")
    attr.add_argument("--n", type=positive_int, nargs="+", default=[10])
    attr.add_argument("--z", type=non_negative_float, nargs="+", default=[0.0])
    attr.add_argument("--window", type=positive_int, nargs="+", default=[10])
    attr.add_argument("--count", type=positive_int, default=None, help="records per half (default: half size)")
    attr.add_argument("--clusters", type=positive_int, default=None)
    attr.add_argument("--csv", type=Path, default=None)
    leaves["audit attr"] = attr

    ktuple = _leaf(audit, "ktuple", "audit ktuple", cmd_audit_ktuple, common, ("input", "synth"))
    ktuple.add_argument("-i", "--input", type=Path)
    ktuple.add_argument("--synth", type=Path, nargs="+", help="synthetic datasets forming the corpus")
    ktuple.add_argument("-k", type=positive_int, default=4, help="tuple order")
    ktuple.add_argument("--tuples", type=non_negative_int, default=1000, help="tuples per class")
    ktuple.add_argument("--max-draws", type=positive_int, default=None)
    ktuple.add_argument("--per-dataset", action="store_true")
    leaves["audit ktuple"] = ktuple

    exposure = _leaf(audit, "exposure", "audit exposure", cmd_audit_exposure, common, ("input",))
    exposure.add_argument("-i", "--input", type=Path)
    exposure.add_argument("--n", type=positive_int, default=10)
    exposure.add_argument("--z", type=non_negative_float, default=0.0)
    exposure.add_argument("--repetitions", type=positive_int, default=20)
    exposure.add_argument("--trials", type=positive_int, default=50)
    exposure.add_argument("--sites", type=positive_int, default=None, help="sites G per repetition")
    exposure.add_argument("--csv", type=Path, default=None)
    leaves["audit exposure"] = exposure

    posterior = _leaf(audit, "posterior", "audit posterior", cmd_audit_posterior, common, ("input", "synth"))
    posterior.add_argument("-i", "--input", type=Path)
    posterior.add_argument("--synth", type=Path)
    posterior.add_argument("--record", type=non_negative_int, default=0)
    posterior.add_argument("--n", type=positive_int, default=2)
    posterior.add_argument("--target", nargs="+", default=None, help="sample indices or ids (default: all)")
    leaves["audit posterior"] = posterior

    evaluate = commands.add_parser("eval", help="accuracy metrics").add_subparsers(dest="eval_command",
                                                                                 required=True)
    ld = _leaf(evaluate, "ld", "eval ld", cmd_eval_ld, common, ("real", "synth"))
    ld.add_argument("--mode", choices=LD_MODES, default="binned")
    ld.add_argument("--window", type=positive_int, default=None)
    ld.add_argument("--windows", type=positive_int, nargs="+", default=[])
    ld.add_argument("--csv", type=Path, default=None, help="per-distance error table")
    pca = _leaf(evaluate, "pca", "eval pca", cmd_eval_pca, common, ("real",))
    pca.add_argument("-k", type=positive_int, default=2)
    pca.add_argument("--csv", type=Path, default=None, help="coordinate table")
    sw = _leaf(evaluate, "wasserstein", "eval wasserstein", cmd_eval_wasserstein, common, ("real", "synth"))
    sw.add_argument("--projections", type=positive_int, default=50)
    sw.add_argument("--pca", type=positive_int, default=None, help="compare in the first k principal components")
    freq = _leaf(evaluate, "freq", "eval freq", cmd_eval_freq, common, ("real", "synth"))
    freq.add_argument("--csv", type=Path, default=None)
    for name, leaf in (("ld", ld), ("pca", pca), ("wasserstein", sw), ("freq", freq)):
        leaf.add_argument("--real", type=Path)
        leaf.add_argument("--synth", type=Path)
        leaves[f"eval {name}"] = leaf

    bench = _leaf(commands, "bench", "bench", cmd_bench, common, help="runtime over a site-count ladder")
    bench.add_argument("--sites", type=positive_int, nargs="+", default=None, help="explicit site counts")
    bench.add_argument("--start", type=positive_int, default=10000)
    bench.add_argument("--steps", type=positive_int, default=5)
    bench.add_argument("--samples", type=positive_int, default=50)
    bench.add_argument("--n", type=positive_int, default=10)
    bench.add_argument("--z", type=non_negative_float, default=0.0)
    bench.add_argument("--csv", type=Path, default=None)
    leaves["bench"] = bench

    convert = _leaf(commands, "convert", "convert", cmd_convert, common, ("input", "output"),
                    help="convert between HAP and VCF")
    convert.add_argument("-i", "--input", type=Path)
    convert.add_argument("-o", "--output", type=Path)
    leaves["convert"] = convert
    return parser, leaves


def _output_format(ns, path) -> str:
    if ns.format:
        return ns.format
    return VCF if Path(path).suffix.lower() == ".vcf" else HAP


def _solver(ns) -> SolverOptions:
    return SolverOptions(max_conflicts=ns.max_conflicts)


def _read(ns, path):
    return read_matrix(path, alphabet=ns.alphabet)


def _sample_index(m, text: str) -> int:
    if text in m.sample_ids:
        return m.sample_ids.index(text)
    try:
        index = int(text)
    except ValueError:
        raise ValueError(f"unknown sample {text!r}")
    if not 0 <= index < m.n_samples:
        raise ValueError(f"sample index {index} out of range for {m.n_samples} samples")
    return index


def cmd_gen(ns, config: RunConfig) -> int:
    m = _read(ns, ns.input)
    fmt = _output_format(ns, ns.output)
    if ns.method == "markov":
        records = MarkovModel(ns.window).fit(m).generate(ns.count, derive_seed(ns.seed, "markov"))
    else:
        params = GenParams(ns.n, ns.z, derive_seed(ns.seed, "gen"), ns.diversity, ns.diverse_from_inputs,
                           ns.retry, _solver(ns))
        plan = None
        if ns.cluster_mode == "plan":
            k = ns.clusters or max(ns.count, math.ceil(m.n_samples / ns.n))
            plan = build_clusters(m, ns.n, k, derive_seed(ns.seed, "clusters"))
        records = generate_cohort(m, plan, params, ns.count, ns.threads, ns.cluster_mode, ns.dump_cnf)
    write_matrix_file(records_to_matrix(records, m, fmt), ns.output, fmt)
    sidecar = ns.provenance or Path(f"{ns.output}.provenance.jsonl")
    write_jsonl(sidecar, config.as_header(), [{"record": r, **rec.provenance} for r, rec in enumerate(records)])
    return 0


def cmd_reverse(ns, config: RunConfig) -> int:
    cohort = _read(ns, ns.input)
    synth = _read(ns, ns.synth)
    target = _sample_index(cohort, ns.posterior) if ns.posterior is not None else None
    lines, tables = [], []
    for index in ns.record:
        if index >= synth.n_samples:
            raise ValueError(f"record {index} out of range for {synth.n_samples} records")
        tokens = synth.column(index)
        problem = build_reverse_constraints(tokens, cohort, ns.n, ns.z, _solver(ns))
        sets = sample_candidate_sets(problem, ns.trials, derive_seed(ns.seed, "reverse", index), ns.threads)
        report = exposure_report(sets, cohort.n_samples, cohort.sample_ids)
        line = {"record": synth.sample_ids[index], **report.to_dict(),
                "exposed_ids": [cohort.sample_ids[i] for i in report.exposed],
                "sets": [[cohort.sample_ids[i] for i in s.members] for s in sets if s.feasible]}
        if target is not None:
            line["posterior"] = theorem1_posterior(tokens, cohort, target, ns.n).to_dict()
        lines.append(line)
        frame = report.frequencies.rename_axis("sample").reset_index()
        frame.insert(0, "record", synth.sample_ids[index])
        frame["exposed"] = [i in report.exposed for i in range(cohort.n_samples)]
        tables.append(frame)
    write_jsonl(ns.report, config.as_header(), lines)
    if ns.csv is not None:
        write_csv(ns.csv, config.as_header(), pd.concat(tables, ignore_index=True))
    return 0


def cmd_audit_attr(ns, config: RunConfig) -> int:
    m = _read(ns, ns.input)
    seed = derive_seed(ns.seed, "attr")
    rows = []
    if ns.method == "genomator":
        for n in ns.n:
            for z in ns.z:
                handle = genomator_handle(n, z, ns.count, ns.clusters, ns.threads)
                report = attr_inference_experiment(m, handle, seed, {"method": "genomator", "n": n, "z": z})
                rows.append(("genomator", n, z, report))
    else:
        for w in ns.window:
            report = attr_inference_experiment(m, markov_handle(w, ns.count), seed, {"method": "markov", "window": w})
            rows.append(("markov", w, "", report))
    write_csv(ns.csv, config.as_header(), sweep_table(rows))
    return 0


def cmd_audit_ktuple(ns, config: RunConfig) -> int:
    m = _read(ns, ns.input)
    corpus = [_read(ns, path) for path in ns.synth]
    private = sample_ktuples(m, ns.k, TupleClass.PRIVATE, ns.tuples, derive_seed(ns.seed, "private"), ns.max_draws)
    fictitious = sample_ktuples(m, ns.k, TupleClass.FICTITIOUS, ns.tuples, derive_seed(ns.seed, "fictitious"),
                                ns.max_draws)
    report = revelation_rates(private.tuples + fictitious.tuples, corpus, ns.per_dataset)
    line = {"k": ns.k, **report.to_dict(), "private_complete": private.complete,
            "fictitious_complete": fictitious.complete, "requested": ns.tuples}
    write_jsonl(ns.report, config.as_header(), [line])
    return 0


def cmd_audit_exposure(ns, config: RunConfig) -> int:
    m = _read(ns, ns.input)
    result = exposure_experiment(m, ns.n, ns.z, ns.repetitions, ns.trials, ns.sites,
                                 derive_seed(ns.seed, "exposure"), threads=ns.threads)
    write_jsonl(ns.report, config.as_header(), [{"exposed": result.exposed, "total": result.total,
                                                  "rate": result.rate, "interval": list(result.interval)}])
    if ns.csv is not None:
        write_csv(ns.csv, config.as_header(), result.table)
    return 0


def cmd_audit_posterior(ns, config: RunConfig) -> int:
    cohort = _read(ns, ns.input)
    synth = _read(ns, ns.synth)
    if ns.record >= synth.n_samples:
        raise ValueError(f"record {ns.record} out of range for {synth.n_samples} records")
    tokens = synth.column(ns.record)
    targets = [_sample_index(cohort, t) for t in ns.target] if ns.target else range(cohort.n_samples)
    lines = [{"sample": cohort.sample_ids[t], **theorem1_posterior(tokens, cohort, t, ns.n).to_dict()}
             for t in targets]
    write_jsonl(ns.report, config.as_header(), lines)
    return 0


def cmd_eval_ld(ns, config: RunConfig) -> int:
    report = ld_square_error(_read(ns, ns.real), _read(ns, ns.synth), ns.mode, ns.window, ns.windows)
    write_jsonl(ns.report, config.as_header(), [report.to_dict()])
    if ns.csv is not None:
        write_csv(ns.csv, config.as_header(), report.binned.reset_index())
    return 0


def cmd_eval_pca(ns, config: RunConfig) -> int:
    real = _read(ns, ns.real)
    points = dosage_matrix(real).T
    model = pca_fit(points, ns.k, derive_seed(ns.seed, "pca"))
    line = {"explained_variance": model.explained_variance, "explained_variance_ratio": model.explained_variance_ratio,
            "iterations": model.iterations}
    tables = [coordinates_table(model, points, real.sample_ids, "real")]
    if ns.synth is not None:
        synth = _read(ns, ns.synth)
        tables.append(coordinates_table(model, dosage_matrix(synth, reference=real).T, synth.sample_ids, "synth"))
    write_jsonl(ns.report, config.as_header(), [line])
    if ns.csv is not None:
        write_csv(ns.csv, config.as_header(), pd.concat(tables, ignore_index=True))
    return 0


def cmd_eval_wasserstein(ns, config: RunConfig) -> int:
    real = _read(ns, ns.real)
    synth = _read(ns, ns.synth)
    x, y = dosage_matrix(real).T, dosage_matrix(synth, reference=real).T
    if ns.pca is not None:
        model = pca_fit(x, ns.pca, derive_seed(ns.seed, "pca"))
        x, y = pca_project(model, x), pca_project(model, y)
    report = sliced_wasserstein(x, y, ns.projections, derive_seed(ns.seed, "wasserstein"))
    write_jsonl(ns.report, config.as_header(), [report.to_dict()])
    return 0


def cmd_eval_freq(ns, config: RunConfig) -> int:
    real = _read(ns, ns.real)
    synth = _read(ns, ns.synth)
    write_jsonl(ns.report, config.as_header(), [{"correlation": frequency_correlation(real, synth)}])
    if ns.csv is not None:
        table = frequency_table(real).merge(frequency_table(synth), on=["site", "site_id", "token"], how="outer",
                                            suffixes=("_real", "_synth")).fillna(0)
        write_csv(ns.csv, config.as_header(), table)
    return 0


def cmd_bench(ns, config: RunConfig) -> int:
    sites = ns.sites or site_ladder(ns.start, ns.steps)
    write_csv(ns.csv, config.as_header(), run_ladder(sites, ns.samples, ns.n, ns.z, ns.seed))
    return 0


def cmd_convert(ns, config: RunConfig) -> int:
    m = _read(ns, ns.input)
    write_matrix_file(m, ns.output, _output_format(ns, ns.output))
    return 0


def _parse(parser, leaves, argv):
    ns = parser.parse_args(argv)
    leaf = leaves[ns._command]
    if ns.config is not None:
        leaf.set_defaults(**config_defaults(leaf, read_config_file(ns.config)))
        ns = parser.parse_args(argv)
    missing = [d for d in ns._required if getattr(ns, d) is None]
    if missing:
        leaf.error("the following arguments are required: " + ", ".join(f"--{d.replace('_', '-')}" for d in missing))
    return ns


def run(argv=None) -> int:
    """
    Parse ``argv``, run one command and return its exit code.

    Returns:
    int: 0 on success, 1 on a domain error, 2 on a usage error.
    """
    argv = list(sys.argv[1:] if argv is None else argv)
    parser, leaves = build_parser()
    try:
        ns = _parse(parser, leaves, argv)
    except SystemExit as e:
        return e.code if isinstance(e.code, int) else 2
    except (OSError, ValueError) as e:
        print(f"satgen: error: {e}", file=sys.stderr)
        return 2

    level = {0: logging.WARNING, 1: logging.INFO}.get(ns.verbose, logging.DEBUG)
    logging.basicConfig(stream=sys.stderr, level=level, format=LOG_FORMAT, force=True)
    config = RunConfig.from_namespace(ns, argv)
    logger.info("running %s (%s)", config.subcommand, VERSION)
    try:
        return ns._handler(ns, config)
    except (ValueError, RuntimeError, OSError) as e:
        print(f"satgen: error: {e}", file=sys.stderr)
        return 1
