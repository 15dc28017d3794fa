"""Command-line interface.

Subcommands: ``simulate``, ``fit``, ``bounds``, ``compare`` and ``bench``.
Settings come from built-in defaults, then an optional INI file given with
``--config``, then command-line flags.  Exit status is 0 on success, 2 for
configuration errors, 3 for data errors and 4 for internal-consistency
faults.
"""

from __future__ import annotations

import argparse
import configparser
import csv
import hashlib
import io
import json
import math
import os
import sys

import numpy as np

from . import __version__
from .align import ReferenceConfig, align_draws, map_draw, procrustes_align, rmse
from .bounds import bound_report, certify_instance, lemma1_certify
from .graph import DataError, load_edge_list, write_edge_list
from .grid import InternalConsistencyError
from .likelihood import LatentState, exact_log_lik, noisy_log_lik
from .model import LinkFunction, ParameterSpace
from .sampler import SamplerConfig, run
from .synth import SynthSpec, generate

SCHEMA_VERSION = 1

EXIT_OK, EXIT_CONFIG, EXIT_DATA, EXIT_INTERNAL = 0, 2, 3, 4


class ConfigError(ValueError):
    pass


# ---------------------------------------------------------------------------
# configuration

DEFAULTS = {
    "model": {"link": "two_param", "S": 1.0, "gamma": 1.0, "beta_lo": -10.0, "beta_hi": 10.0,
              "theta_lo": -5.0, "theta_hi": 5.0, "psi_prior_std": 10.0,
              "prop_std_z": 0.1, "prop_std_psi": 0.1},
    "sampler": {"iterations": 1000, "burn_in": 500, "thin": 1, "mode": "noisy", "seed": 0,
                "adapt": False, "adapt_lo": 0.2, "adapt_hi": 0.5, "adapt_interval": 100,
                "random_scan": False, "noisy_kernel": "joint", "threads": 1},
    "grid": {"M": 8},
    "study": {"n": 200, "beta": 0.5, "theta": math.log(3.0), "law": "uniform",
              "replicates": 1, "pin_origin": False},
}

_BOOL = {"1": True, "true": True, "yes": True, "on": True,
         "0": False, "false": False, "no": False, "off": False}


def _cast(value, like):
    if isinstance(like, bool):
        if isinstance(value, bool):
            return value
        try:
            return _BOOL[str(value).strip().lower()]
        except KeyError:
            raise ConfigError(f"not a boolean: {value!r}") from None
    try:
        return type(like)(value)
    except (TypeError, ValueError):
        raise ConfigError(f"cannot read {value!r} as {type(like).__name__}") from None


def load_config(path, overrides: dict) -> dict:
    """Merge defaults, an INI file and ``{section: {key: value}}`` overrides."""
    cfg = {s: dict(v) for s, v in DEFAULTS.items()}
    cfg["io"] = {}
    if path:
        parser = configparser.ConfigParser()
        parser.optionxform = str
        try:
            with open(path, encoding="utf-8") as fh:
                parser.read_file(fh)
        except (OSError, configparser.Error) as exc:
            raise ConfigError(f"cannot read config {path!r}: {exc}") from exc
        for section in parser.sections():
            if section not in cfg:
                raise ConfigError(f"unknown config section [{section}]")
            for key, val in parser.items(section):
                if section != "io" and key not in cfg[section]:
                    raise ConfigError(f"unknown key {key!r} in [{section}]")
                like = cfg[section].get(key, "")
                cfg[section][key] = _cast(val, like) if section != "io" else val
    for section, vals in overrides.items():
        for key, val in vals.items():
            if val is not None:
                like = cfg[section].get(key, "")
                cfg[section][key] = _cast(val, like) if section != "io" else val
    return cfg


def config_hash(cfg: dict) -> str:
    # output locations do not change results, so they stay out of the hash
    cfg = {k: ({kk: vv for kk, vv in v.items() if kk != "out"} if k == "io" else v)
           for k, v in cfg.items()}
    blob = json.dumps(cfg, sort_keys=True, default=str).encode()
    return hashlib.sha256(blob).hexdigest()[:12]


def build_link_space(cfg):
    m = cfg["model"]
    try:
        link = LinkFunction(m["link"])
        bounds = [[m["beta_lo"], m["beta_hi"]]]
        if link.kind == "two_param":
            bounds.append([m["theta_lo"], m["theta_hi"]])
        space = ParameterSpace(S=m["S"], psi_bounds=bounds, gamma=m["gamma"],
                               prop_std_z=m["prop_std_z"], prop_std_psi=m["prop_std_psi"],
                               psi_prior_std=m["psi_prior_std"])
    except ValueError as exc:
        raise ConfigError(str(exc)) from exc
    return link, space


def build_sampler_config(cfg, **extra):
    s = cfg["sampler"]
    try:
        return SamplerConfig(
            iterations=s["iterations"], burn_in=s["burn_in"], thin=s["thin"], mode=s["mode"],
            M=cfg["grid"]["M"], seed=s["seed"], adapt=s["adapt"],
            adapt_window=(s["adapt_lo"], s["adapt_hi"]), adapt_interval=s["adapt_interval"],
            random_scan=s["random_scan"], noisy_kernel=s["noisy_kernel"], **extra)
    except ValueError as exc:
        raise ConfigError(str(exc)) from exc


def _set_threads(cfg):
    n = cfg["sampler"].get("threads", 1)
    if n < 1:
        raise ConfigError("threads must be >= 1")
    if n == 1:
        return
    try:
        import numba
        numba.set_num_threads(min(n, numba.config.NUMBA_NUM_THREADS))
    except (ImportError, ValueError):
        pass


# ---------------------------------------------------------------------------
# output helpers

def meta(cfg, seed=None) -> dict:
    return {"version": __version__, "schema_version": SCHEMA_VERSION,
            "seed": seed, "config_hash": config_hash(cfg)}


def _header(cfg, seed=None) -> str:
    m = meta(cfg, seed)
    return f"noisylpm {m['version']} seed={m['seed']} config_hash={m['config_hash']}"


def write_csv(path, header_line, columns, rows):
    with open(path, "w", encoding="utf-8", newline="") as fh:
        fh.write(f"# {header_line}\n")
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(columns)
        for r in rows:
            w.writerow([f"{v:.10g}" if isinstance(v, (float, np.floating)) else v for v in r])


def write_json(path, obj):
    with open(path, "w", encoding="utf-8") as fh:
        json.dump(obj, fh, indent=2, sort_keys=True, default=_json_default)
        fh.write("\n")


def _json_default(o):
    if isinstance(o, np.ndarray):
        return o.tolist()
    if isinstance(o, (np.integer,)):
        return int(o)
    if isinstance(o, (np.floating,)):
        return float(o)
    raise TypeError(type(o))


def read_csv(path) -> tuple[list[str], np.ndarray]:
    with open(path, encoding="utf-8") as fh:
        lines = [ln for ln in fh if not ln.startswith("#")]
    if not lines:
        raise DataError(f"empty table {path!r}")
    cols = lines[0].strip().split(",")
    try:
        data = np.loadtxt(io.StringIO("".join(lines[1:])), delimiter=",", ndmin=2)
    except ValueError as exc:
        raise DataError(f"malformed table {path!r}: {exc}") from exc
    return cols, data


def read_positions(path, n=None) -> np.ndarray:
    cols, data = read_csv(path)
    try:
        ix, iy = cols.index("x"), cols.index("y")
    except ValueError:
        raise DataError(f"{path!r} needs x and y columns") from None
    Z = data[:, [ix, iy]]
    if n is not None and Z.shape[0] != n:
        raise DataError(f"{path!r} has {Z.shape[0]} positions, network has {n} nodes")
    return Z


def _mkdir(path):
    try:
        os.makedirs(path, exist_ok=True)
    except OSError as exc:
        raise ConfigError(f"cannot create output directory {path!r}: {exc}") from exc


# ---------------------------------------------------------------------------
# simulate

def cmd_simulate(args, cfg) -> int:
    st = cfg["study"]
    link, space = build_link_space(cfg)
    out = cfg["io"].get("out") or "."
    _mkdir(out)
    reps = st["replicates"]
    if reps < 1:
        raise ConfigError("replicates must be >= 1")
    seed0 = cfg["sampler"]["seed"]
    densities = []
    for r in range(reps):
        seed = seed0 + r
        try:
            spec = SynthSpec(N=st["n"], beta=st["beta"], theta=st["theta"], law=st["law"],
                             seed=seed, pin_first_node_at_origin=st["pin_origin"],
                             S=space.S, gamma=space.gamma)
        except ValueError as exc:
            raise ConfigError(str(exc)) from exc
        net, Z, psi = generate(spec, link)
        densities.append(net.density)
        tag = "" if reps == 1 else f"_r{r:03d}"
        hdr = _header(cfg, seed)
        write_edge_list(net, os.path.join(out, f"edges{tag}.txt"),
                        header=f"{hdr}\nnodes={net.n_nodes} edges={net.n_edges}")
        write_csv(os.path.join(out, f"positions{tag}.csv"), hdr, ["node", "x", "y"],
                  ([i, Z[i, 0], Z[i, 1]] for i in range(net.n_nodes)))
        write_json(os.path.join(out, f"params{tag}.json"),
                   {"meta": meta(cfg, seed), "link": link.kind, "N": spec.N,
                    "psi": dict(zip(link.param_names, psi.tolist())), "law": spec.law,
                    "pin_first_node_at_origin": spec.pin_first_node_at_origin,
                    "n_edges": net.n_edges, "density": net.density})
    if reps > 1:
        write_csv(os.path.join(out, "densities.csv"), _header(cfg, seed0),
                  ["replicate", "seed", "density"],
                  ([r, seed0 + r, d] for r, d in enumerate(densities)))
    print(f"mean density {np.mean(densities):.6f} over {reps} network(s)")
    return EXIT_OK


# ---------------------------------------------------------------------------
# fit

def cmd_fit(args, cfg) -> int:
    link, space = build_link_space(cfg)
    edges = cfg["io"].get("edges")
    if not edges:
        raise ConfigError("fit needs an edge list (--edges)")
    n_nodes = cfg["io"].get("n_nodes")
    net = load_edge_list(edges, n_nodes=int(n_nodes) if n_nodes else None)
    truth = cfg["io"].get("truth")
    Z_true = read_positions(truth, net.n_nodes) if truth else None
    _set_threads(cfg)
    config = build_sampler_config(cfg)
    sample = run(net, link, space, config)

    out = cfg["io"].get("out") or "."
    _mkdir(out)
    hdr = _header(cfg, config.seed)
    write_csv(os.path.join(out, "psi_draws.csv"), hdr, ["draw", *link.param_names],
              ([t, *sample.psi[t]] for t in range(sample.n_draws)))
    if cfg["io"].get("z_draws", "yes") not in ("no", "false", "0"):
        write_csv(os.path.join(out, "z_draws.csv"), hdr, ["draw", "node", "x", "y"],
                  ([t, i, sample.Z[t, i, 0], sample.Z[t, i, 1]]
                   for t in range(sample.n_draws) for i in range(net.n_nodes)))

    if Z_true is not None:
        ref = ReferenceConfig(Z_true, "true-positions")
    else:
        ref = map_draw(sample, net, link, space)
    aligned = align_draws(sample.Z, ref)
    post = aligned.mean(axis=0)
    write_csv(os.path.join(out, "posterior_positions.csv"), hdr, ["node", "x", "y"],
              ([i, post[i, 0], post[i, 1]] for i in range(net.n_nodes)))
    q = np.percentile(sample.psi, [2.5, 50, 97.5], axis=0)
    summary = {
        "meta": meta(cfg, config.seed),
        "mode": config.mode,
        "M": config.M if config.mode == "noisy" else None,
        "N": net.n_nodes,
        "n_edges": net.n_edges,
        "n_draws": sample.n_draws,
        "iterations": config.iterations,
        "burn_in": config.burn_in,
        "thin": config.thin,
        "reference": ref.source,
        "psi_mean": dict(zip(link.param_names, sample.psi.mean(axis=0).tolist())),
        "psi_q025": dict(zip(link.param_names, q[0].tolist())),
        "psi_median": dict(zip(link.param_names, q[1].tolist())),
        "psi_q975": dict(zip(link.param_names, q[2].tolist())),
        "acceptance_psi": dict(zip(link.param_names, sample.acceptance_psi.tolist())),
        "acceptance_z_mean": float(np.nanmean(sample.acceptance_z)),
        "timings": sample.timings,
        "final_std_psi": sample.std_psi.tolist(),
        "final_std_z_mean": float(sample.std_z.mean()),
    }
    if Z_true is not None:
        summary["rmse_to_truth"] = rmse(post, Z_true)
    write_json(os.path.join(out, "summary.json"), summary)
    print(f"{sample.n_draws} draws in {sample.timings['total_seconds']:.2f} s "
          f"({config.mode}); summary written to {out}")
    return EXIT_OK


# ---------------------------------------------------------------------------
# bounds

def _parse_list(text, kind=int):
    try:
        return [kind(v) for v in str(text).split(",") if v.strip()]
    except ValueError:
        raise ConfigError(f"cannot parse list {text!r}") from None


def cmd_bounds(args, cfg) -> int:
    link, space = build_link_space(cfg)
    N = cfg["study"]["n"]
    if N < 2:
        raise ConfigError("N must be at least 2")
    if args.tau is not None and not 0 < args.tau < 1:
        raise ConfigError("tau must lie in (0, 1)")
    if args.C is not None and not args.C > 0:
        raise ConfigError("C must be positive")
    C = 1.0 if args.C is None else args.C
    tau = 0.99 if args.tau is None else args.tau
    reports = []
    if args.b is not None:
        if args.b < 0:
            raise ConfigError("b must be non-negative")
        reports.append(bound_report(link, space, N, b=args.b, C=C, tau=tau))
    else:
        Ms = _parse_list(args.m) if args.m else [cfg["grid"]["M"]]
        if any(m < 1 for m in Ms):
            raise ConfigError("M must be >= 1")
        reports = [bound_report(link, space, N, M=m, C=C, tau=tau) for m in Ms]
    result = {"meta": meta(cfg, cfg["sampler"]["seed"]),
              "reports": [r.to_dict() for r in reports]}
    if args.certify:
        seed = cfg["sampler"]["seed"]
        rng = np.random.default_rng(seed)
        n = args.certify_n
        spec = SynthSpec(N=n, beta=float(space.psi_midpoint()[0]),
                         theta=float(space.psi_midpoint()[-1]), seed=seed, S=space.S)
        net, Z, psi = generate(spec, link)
        certs = []
        for r in reports:
            M = r.M if r.M > 0 else max(1, int(round(2 * space.S / max(r.b, 1e-12))))
            st = LatentState.with_grid(rng.uniform(-space.S, space.S, (n, 2)),
                                       space.psi_midpoint(), net, M, space.S)
            c = certify_instance(st, net, link, space, args.proposals, seed=seed)
            certs.append({"M": M, **c})
        result["certificates"] = certs
        result["lemma1"] = lemma1_certify(link, space, args.lemma_samples, seed=seed)
    text = json.dumps(result, indent=2, sort_keys=True, default=_json_default)
    out = cfg["io"].get("out")
    if out:
        with open(out, "w", encoding="utf-8") as fh:
            fh.write(text + "\n")
    else:
        print(text)
    if args.certify:
        ok = all(c["passed"] for c in result["certificates"]) and result["lemma1"]["passed"]
        if not ok:
            print("bound certificate violated", file=sys.stderr)
            return EXIT_INTERNAL
    return EXIT_OK


# ---------------------------------------------------------------------------
# compare

def study1_table(n_networks, N, Ms, link, space, beta, theta, seed0=0):
    """Rows ``(network, M, exact, noisy)`` for the log-likelihood comparison."""
    rows = []
    for r in range(n_networks):
        spec = SynthSpec(N=N, beta=beta, theta=theta, seed=seed0 + r, S=space.S)
        net, Z, psi = generate(spec, link)
        exact = exact_log_lik(LatentState(Z, psi), net, link)
        for M in Ms:
            st = LatentState.with_grid(Z, psi, net, M, space.S)
            rows.append((r, M, exact, noisy_log_lik(st, net, link)))
    return rows


def _load_run(path):
    with open(os.path.join(path, "summary.json"), encoding="utf-8") as fh:
        summary = json.load(fh)
    post = read_positions(os.path.join(path, "posterior_positions.csv"))
    cols, psi = read_csv(os.path.join(path, "psi_draws.csv"))
    return summary, post, cols[1:], psi[:, 1:]


def cmd_compare(args, cfg) -> int:
    link, space = build_link_space(cfg)
    out = cfg["io"].get("out") or "."
    _mkdir(out)
    st = cfg["study"]
    seed = cfg["sampler"]["seed"]
    hdr = _header(cfg, seed)
    if args.run_a is None:
        Ms = _parse_list(args.m) if args.m else [8, 12, 16]
        rows = study1_table(st["replicates"], st["n"], Ms, link, space, st["beta"],
                            st["theta"], seed)
        write_csv(os.path.join(out, "loglik_scatter.csv"), hdr,
                  ["network", "M", "exact", "noisy"], rows)
        arr = np.array(rows, dtype=float)
        for M in Ms:
            err = arr[arr[:, 1] == M, 3] - arr[arr[:, 1] == M, 2]
            print(f"M={M}: median(noisy-exact)={np.median(err):.4f} "
                  f"mean|err|={np.mean(np.abs(err)):.4f}")
        return EXIT_OK

    if args.run_b is None:
        raise ConfigError("--run-b is required with --run-a")
    sa, pa, names, psia = _load_run(args.run_a)
    sb, pb, _, psib = _load_run(args.run_b)
    if pa.shape != pb.shape:
        raise DataError("runs have different numbers of nodes")
    truth = cfg["io"].get("truth")
    ref = read_positions(truth) if truth else pa
    pa_al, pb_al = procrustes_align(pa, ref), procrustes_align(pb, ref)
    report = {"meta": meta(cfg, seed), "rmse_a_b": rmse(pa_al, procrustes_align(pb, pa_al))}
    if truth:
        report["rmse_a_truth"] = rmse(pa_al, ref)
        report["rmse_b_truth"] = rmse(pb_al, ref)
    report["psi"] = {}
    for k, name in enumerate(names):
        lo, hi = np.percentile(psia[:, k], [2.5, 97.5])
        mb = float(psib[:, k].mean())
        report["psi"][name] = {"mean_a": float(psia[:, k].mean()), "mean_b": mb,
                               "a_q025": float(lo), "a_q975": float(hi),
                               "b_mean_in_a_interval": bool(lo <= mb <= hi)}
    write_json(os.path.join(out, "compare.json"), report)
    write_csv(os.path.join(out, "positions_compare.csv"), hdr,
              ["node", "x_a", "y_a", "x_b", "y_b"],
              ([i, pa_al[i, 0], pa_al[i, 1], pb_al[i, 0], pb_al[i, 1]] for i in range(len(pa))))

    # plug-in edge probabilities from posterior means
    def probs(post, psi_mean):
        beta, scale = link.beta_scale(psi_mean)
        iu = np.triu_indices(post.shape[0], 1)
        d = np.hypot(*(post[:, None, :] - post[None, :, :]).transpose(2, 0, 1))[iu]
        return iu, 1.0 / (1.0 + np.exp(-(beta - scale * d)))

    iu, qa = probs(pa, psia.mean(axis=0))
    _, qb = probs(pb, psib.mean(axis=0))
    cols = ["i", "j", "p_a", "p_b"]
    rows = zip(iu[0], iu[1], qa, qb)
    if truth:
        ptrue = cfg["io"].get("truth_psi")
        if ptrue:
            _, qt = probs(ref, np.array(_parse_list(ptrue, float)))
            cols.append("p_true")
            rows = zip(iu[0], iu[1], qa, qb, qt)
    write_csv(os.path.join(out, "edge_prob_scatter.csv"), hdr, cols, rows)
    print(json.dumps({k: v for k, v in report.items() if k != "meta"}, indent=2))
    return EXIT_OK


# ---------------------------------------------------------------------------
# bench

def bench_rows(Ns, Ms, modes, sweeps, link, space, seed=0, beta=0.5, theta=math.log(3.0)):
    """Time ``sweeps`` full sweeps and ``sweeps`` position-only sweeps per setting."""
    rows = []
    for N in Ns:
        net, Z, psi = generate(SynthSpec(N=N, beta=beta, theta=theta, seed=seed, S=space.S), link)
        for mode in modes:
            for M in (Ms if mode == "noisy" else [0]):
                kw = dict(iterations=sweeps + 1, burn_in=1, mode=mode, M=max(M, 1), seed=seed,
                          Z0=Z, psi0=psi, store_z=False)
                run(net, link, space, SamplerConfig(iterations=3, burn_in=1,
                                                    **{k: v for k, v in kw.items()
                                                       if k not in ("iterations", "burn_in")}))
                full = run(net, link, space, SamplerConfig(**kw))
                zonly = run(net, link, space, SamplerConfig(fixed_psi=tuple(range(space.K)), **kw))
                per_sweep = full.timings["sampling_per_sweep"]
                per_node = zonly.timings["sampling_per_sweep"] / N
                rows.append((mode, N, M if mode == "noisy" else "", sweeps, per_sweep,
                             per_sweep * 200_000, per_node))
    return rows


def cmd_bench(args, cfg) -> int:
    link, space = build_link_space(cfg)
    Ns = _parse_list(args.n_list)
    Ms = _parse_list(args.m) if args.m else [8, 12, 16]
    modes = [m.strip() for m in args.modes.split(",")]
    if any(m not in ("exact", "noisy") for m in modes):
        raise ConfigError("modes must be exact and/or noisy")
    if args.sweeps < 1:
        raise ConfigError("sweeps must be >= 1")
    _set_threads(cfg)
    rows = bench_rows(Ns, Ms, modes, args.sweeps, link, space, cfg["sampler"]["seed"])
    out = cfg["io"].get("out")
    cols = ["mode", "N", "M", "sweeps", "seconds_per_sweep", "projected_seconds_200k",
            "seconds_per_node_z_update"]
    if out:
        write_csv(out, _header(cfg, cfg["sampler"]["seed"]), cols, rows)
    w = csv.writer(sys.stdout, lineterminator="\n")
    w.writerow(cols)
    for r in rows:
        w.writerow([f"{v:.6g}" if isinstance(v, float) else v for v in r])
    return EXIT_OK


# ---------------------------------------------------------------------------
# argument parsing

def _add_common(p):
    p.add_argument("--config", help="INI file with [model], [sampler], [grid], [io], [study]")
    p.add_argument("--seed", type=int)
    p.add_argument("--link", choices=["hoff", "two_param"])
    p.add_argument("--out", help="output directory (file for bounds/bench)")
    p.add_argument("--threads", type=int)


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="noisylpm", description=__doc__.splitlines()[0])
    ap.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    sub = ap.add_subparsers(dest="command", required=True)

    p = sub.add_parser("simulate", help="generate synthetic networks")
    _add_common(p)
    p.add_argument("--n", type=int)
    p.add_argument("--beta", type=float)
    p.add_argument("--theta", type=float)
    p.add_argument("--law", choices=["uniform", "truncated-gaussian"])
    p.add_argument("--pin-origin", action="store_true", default=None)
    p.add_argument("--replicates", type=int)

    p = sub.add_parser("fit", help="run the exact or noisy sampler on an edge list")
    _add_common(p)
    p.add_argument("--edges")
    p.add_argument("--n-nodes", type=int, help="take ids as dense 0..n-1")
    p.add_argument("--truth", help="true positions CSV used as Procrustes reference")
    p.add_argument("--mode", choices=["exact", "noisy"])
    p.add_argument("--grid-m", type=int)
    p.add_argument("--iterations", type=int)
    p.add_argument("--burn-in", type=int)
    p.add_argument("--thin", type=int)
    p.add_argument("--adapt", action="store_true", default=None)
    p.add_argument("--random-scan", action="store_true", default=None)
    p.add_argument("--noisy-kernel", choices=["joint", "row"])
    p.add_argument("--no-z-draws", action="store_true")

    p = sub.add_parser("bounds", help="evaluate error bounds as JSON")
    _add_common(p)
    p.add_argument("--n", type=int)
    p.add_argument("--m", help="comma-separated grid sizes")
    p.add_argument("--b", type=float, help="box side (overrides --m)")
    p.add_argument("--C", type=float)
    p.add_argument("--tau", type=float)
    p.add_argument("--certify", action="store_true", help="run empirical certificates")
    p.add_argument("--certify-n", type=int, default=6)
    p.add_argument("--proposals", type=int, default=1000)
    p.add_argument("--lemma-samples", type=int, default=100_000)

    p = sub.add_parser("compare", help="log-likelihood scatter or run-vs-run comparison")
    _add_common(p)
    p.add_argument("--n", type=int)
    p.add_argument("--m", help="comma-separated grid sizes for the log-likelihood table")
    p.add_argument("--replicates", type=int, help="number of networks for the table")
    p.add_argument("--beta", type=float)
    p.add_argument("--theta", type=float)
    p.add_argument("--run-a", help="fit output directory")
    p.add_argument("--run-b", help="fit output directory")
    p.add_argument("--truth", help="true positions CSV")
    p.add_argument("--truth-psi", help="comma-separated true psi")

    p = sub.add_parser("bench", help="per-sweep timing table")
    _add_common(p)
    p.add_argument("--n-list", default="200,400,600")
    p.add_argument("--m", help="comma-separated grid sizes for noisy mode")
    p.add_argument("--modes", default="exact,noisy")
    p.add_argument("--sweeps", type=int, default=20)
    return ap


def _overrides(args) -> dict:
    g = lambda name: getattr(args, name, None)
    return {
        "model": {"link": g("link")},
        "sampler": {"seed": g("seed"), "mode": g("mode"), "iterations": g("iterations"),
                    "burn_in": g("burn_in"), "thin": g("thin"), "adapt": g("adapt"),
                    "random_scan": g("random_scan"), "noisy_kernel": g("noisy_kernel"),
                    "threads": g("threads")},
        "grid": {"M": g("grid_m")},
        "study": {"n": g("n"), "beta": g("beta"), "theta": g("theta"), "law": g("law"),
                  "replicates": g("replicates"), "pin_origin": g("pin_origin")},
        "io": {"edges": g("edges"), "out": g("out"), "truth": g("truth"),
               "n_nodes": None if g("n_nodes") is None else str(g("n_nodes")),
               "truth_psi": g("truth_psi"),
               "z_draws": "no" if g("no_z_draws") else None},
    }


COMMANDS = {"simulate": cmd_simulate, "fit": cmd_fit, "bounds": cmd_bounds,
            "compare": cmd_compare, "bench": cmd_bench}


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        cfg = load_config(args.config, _overrides(args))
        return COMMANDS[args.command](args, cfg)
    except ConfigError as exc:
        print(f"noisylpm: config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except DataError as exc:
        print(f"noisylpm: data error: {exc}", file=sys.stderr)
        return EXIT_DATA
    except InternalConsistencyError as exc:
        print(f"noisylpm: internal consistency fault: {exc}", file=sys.stderr)
        return EXIT_INTERNAL


if __name__ == "__main__":
    sys.exit(main())
