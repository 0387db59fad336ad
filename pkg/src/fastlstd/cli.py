"""Command-line entry point: ``fastlstd <subcommand> [flags]``.

Every subcommand accepts ``--config FILE`` (flat ``key=value``, keys named
like the long flags) and ``--seed``. Output files start with a ``#`` line
holding the resolved configuration as JSON, except JSON outputs, which carry
it under a top-level ``"config"`` key.

Exit codes: 0 success, 1 numeric or regime failure, 2 usage or I/O failure.
"""

from __future__ import annotations

import argparse
import json
import math
import sys
from dataclasses import replace
from pathlib import Path

import numpy as np

from . import bounds as bd
from .bandit import BanditConfig, flinucb_sa_run
from .configfile import parse_bool, read_kv
from .core import StepSchedule, load_transitions
from .errors import (
    ConfigurationError,
    EmptyPoolError,
    FastLstdError,
    FormatError,
    RegimeError,
    SampleSizeError,
    ScaleError,
    SingularityError,
)
from .exact import ls_solve, lstd_solve, lstd_solve_reg, min_eigenvalue
from .experiments import error_matrix, random_instance, regression_instance, run_bench
from .lspi import ExactEval, QPolicy, SaEval, lspi_run
from .rng import RngHandle, splitmix64
from .sa import SaMode, run_fls_sa, run_flstd_sa
from .traffic import EnvSamples, GridConfig, TrafficFeatureMap, collect_samples, evaluate_policy_tar

EXIT_OK, EXIT_NUMERIC, EXIT_USAGE = 0, 1, 2


class UsageError(Exception):
    """Bad flags or unreadable inputs (exit code 2)."""


# ---------------------------------------------------------------------------
# helpers


def _header(command: str, config: dict) -> str:
    return f"# fastlstd {command} " + json.dumps(config, sort_keys=True, default=str) + "\n"


def _resolved(args) -> dict:
    return {
        k: v for k, v in sorted(vars(args).items())
        if k not in ("func", "config", "command") and not k.startswith("_")
    }


def _open_out(path):
    if path in (None, "-"):
        return None
    p = Path(path)
    if p.parent and not p.parent.exists():
        raise UsageError(f"output directory does not exist: {p.parent}")
    return open(p, "w", encoding="utf-8", newline="")


def _write_text(path, text: str):
    fh = _open_out(path)
    if fh is None:
        sys.stdout.write(text)
        return
    with fh:
        fh.write(text)


def _grid_config(args) -> GridConfig:
    base = GridConfig.load(args.env_config) if args.env_config else GridConfig()
    if args.grid:
        base = base.with_grid(args.grid)
    if getattr(args, "horizon", None):
        base = replace(base, horizon=args.horizon)
    return base


def _collect(config: GridConfig, samples: int, seed: int) -> EnvSamples:
    episodes = max(1, math.ceil(samples / config.horizon))
    es = collect_samples(config, None, episodes, RngHandle(seed))
    if len(es) > samples:
        es = EnvSamples(*(getattr(es, f)[:samples] for f in ("q", "t", "action", "reward", "q_next", "t_next")))
    return es


def _float_list(s):
    return [float(x) for x in str(s).split(",") if x.strip()]


def _int_list(s):
    return [int(float(x)) for x in str(s).split(",") if x.strip()]


# ---------------------------------------------------------------------------
# evaluate


def _transition_pool(args):
    if args.transitions:
        return load_transitions(args.transitions)
    if args.env == "traffic":
        cfg = _grid_config(args)
        return _collect(cfg, args.samples, args.seed).uniform_policy_transition_set(cfg)
    if args.env == "random":
        return random_instance(args.instance_seed, args.dim, args.samples)
    raise UsageError("give --transitions FILE or --env {traffic,random}")


def _schedule(args, mu_cov):
    c = args.c
    if c is None:
        if args.schedule == "corollary1":
            c = 1.33 / (1 - args.beta) ** 2
        elif args.schedule == "iterate_averaging":
            c = 1.5
        else:
            c = 1.6 / mu_cov
    if args.schedule == "corollary1":
        return StepSchedule.corollary1(args.beta, c)
    if args.schedule == "iterate_averaging":
        return StepSchedule.iterate_averaging(args.beta, c, args.alpha)
    return StepSchedule.least_squares(c)


def _bound_columns(args, tset, schedule, theta_hat):
    """Envelope callables for the trajectory CSV, or ``(None, None)`` outside the regime."""
    if schedule.kind.value != "corollary1" or args.mu_reg:
        return None, None, "bound columns need the corollary1 schedule without regularisation"
    mu = min_eigenvalue(tset)
    if mu <= 0:
        return None, None, "feature covariance is singular"
    params = bd.BoundParams(
        beta=args.beta, mu=mu, c=schedule.c, r_max=tset.r_max(), delta=args.delta,
        init_dist=float(np.linalg.norm(theta_hat)),
    )
    try:
        bd.k2(params, 1)
    except RegimeError as exc:
        return None, None, str(exc)
    return (
        lambda n: bd.envelope(params, n, high_probability=False),
        lambda n: bd.envelope(params, n),
        None,
    )


def cmd_evaluate(args) -> int:
    tset = _transition_pool(args)
    mu_cov = min_eigenvalue(tset)
    out_cfg = _resolved(args)
    if args.mu_reg:
        theta_hat = lstd_solve_reg(tset, args.beta, args.mu_reg).theta
    else:
        theta_hat = lstd_solve(tset, args.beta)
    if args.mode in ("exact", "both"):
        print("theta_hat = " + json.dumps([float(x) for x in theta_hat]))
        if args.mode == "exact":
            if args.out:
                rows = "".join(f"{i},{float(x)!r}\n" for i, x in enumerate(theta_hat))
                _write_text(args.out, _header("evaluate", out_cfg) + "index,theta\n" + rows)
            return EXIT_OK
    schedule = _schedule(args, mu_cov)
    mode = SaMode(mu=args.mu_reg, average=args.average, burn_in=args.burn_in)
    state, traj = run_flstd_sa(
        tset, args.beta, schedule, mode, args.steps, args.seed, args.record_every, theta_hat
    )
    k1f, k2f, why = _bound_columns(args, tset, schedule, theta_hat)
    if why:
        print(f"note: bound columns left empty ({why})", file=sys.stderr)
    final = state.theta if not args.average else state.theta_bar
    print("theta_sa = " + json.dumps([float(x) for x in final]))
    print(f"final norm_diff = {float(np.linalg.norm(final - theta_hat)):.6g}")
    fh = _open_out(args.out)
    if fh is not None:
        with fh:
            fh.write(_header("evaluate", out_cfg))
            traj.write_csv(fh, k1f, k2f)
    return EXIT_OK


# ---------------------------------------------------------------------------
# bounds


def _bound_params(args, data=None):
    mu = args.mu
    if mu == "auto":
        if data is None:
            raise UsageError('--mu auto needs --transitions (or --monte-carlo)')
        mu = min_eigenvalue(data)
    else:
        mu = float(mu)
    c = args.c
    if args.product is not None:
        if args.kind == "ls":
            c = args.product / mu
        else:
            c = args.product / ((1 - args.beta) ** 2 * mu)
    if c is None:
        raise UsageError("give --c or --product")
    return bd.BoundParams(
        beta=args.beta, mu=mu, c=c, alpha=args.alpha, r_max=args.r_max, v_max=args.v_max,
        delta=args.delta, init_dist=args.init_dist, sigma=args.sigma,
    )


def cmd_bounds(args) -> int:
    data = load_transitions(args.transitions) if args.transitions else None
    if args.monte_carlo:
        return _bounds_monte_carlo(args, data)
    params = _bound_params(args, data)
    prefix = "mu c" if args.kind == "ls" else "(1-beta)^2"
    for w in params.warnings:
        if w.startswith(prefix):
            print(f"warning: {w}", file=sys.stderr)
    lines, failure = [], None
    for n in _int_list(args.n):
        if args.kind == "td":
            a, b = bd.k1(params, n), bd.k2(params, n)
            scale = math.sqrt(n + params.c)
        elif args.kind == "ia":
            a, b = bd.k_ia(params, n)
            scale = (n + params.c) ** (params.alpha / 2)
        else:
            a = bd.k1_ls(params, n)
            scale = math.sqrt(n + params.c)
            try:
                b = bd.k_ls(params, n)[1]
            except RegimeError as exc:
                b, failure = float("nan"), exc
        lines.append(
            f"n={n} K1={a:.6g} K2={b:.6g} envelope_k1={a / scale:.6g} envelope_k2={b / scale:.6g}"
        )
    text = "\n".join(lines) + "\n"
    print(text, end="")
    if args.out:
        _write_text(args.out, _header("bounds", _resolved(args)) + text)
    if failure is not None:
        print(f"error: {failure}", file=sys.stderr)
        return EXIT_NUMERIC
    return EXIT_OK


def _bounds_monte_carlo(args, data) -> int:
    tset = data if data is not None else random_instance(args.instance_seed, args.dim, args.samples)
    theta_hat = lstd_solve(tset, args.beta)
    params = _bound_params(args, tset).with_(
        init_dist=float(np.linalg.norm(theta_hat)),
        r_max=max(args.r_max, tset.r_max()),
    )
    n = _int_list(args.n)[-1]
    seeds = [splitmix64(args.seed, k + 1) for k in range(args.monte_carlo)]
    errs, _ = error_matrix(
        tset.phi, tset.rewards, tset.phi_next, True, args.beta,
        StepSchedule.corollary1(args.beta, params.c), None, seeds, [n], theta_hat,
    )
    report = bd.quantile_check_errors(errs[:, 0], params, n)
    body = report.to_dict()
    body["config"] = _resolved(args)
    text = json.dumps(body, sort_keys=True) + "\n"
    print(
        f"n={n} envelope={report.envelope:.6g} empirical_fraction={report.empirical_fraction:.4f} "
        f"threshold={report.threshold:.4f} {'pass' if report.passed else 'fail'}"
    )
    if args.out:
        _write_text(args.out, text)
    return EXIT_OK if report.passed else EXIT_NUMERIC


# ---------------------------------------------------------------------------
# bench


def cmd_bench(args) -> int:
    res = run_bench(_int_list(args.dims), reps=args.reps)
    lines = ["d,sa_ns_per_step,sm_ns_per_sample,ratio"]
    lines += [f"{d},{a:.3f},{b:.3f},{r:.3f}" for d, a, b, r in res.rows()]
    text = "\n".join(lines) + "\n"
    if args.out:
        _write_text(args.out, _header("bench", _resolved(args)) + text)
    else:
        print(text, end="")
    if len(res.dims) > 1:
        print(f"sa_slope={res.sa_slope:.3f} sm_slope={res.sm_slope:.3f}")
    return EXIT_OK


# ---------------------------------------------------------------------------
# lspi


def cmd_lspi(args) -> int:
    cfg = _grid_config(args)
    fmap = TrafficFeatureMap(cfg)
    out_dir = Path(args.out_dir) if args.out_dir else None
    if out_dir is not None:
        out_dir.mkdir(parents=True, exist_ok=True)
    modes = ["exact", "sa"] if args.mode == "both" else [args.mode]
    schedule = StepSchedule.corollary1(args.beta, args.c or 1.33 / (1 - args.beta) ** 2)
    config = _resolved(args)
    tar_rows, wall = [], {m: [] for m in modes}
    for k in range(args.seeds):
        seed = args.seed + k
        qs = _collect(cfg, args.samples, seed).q_transition_set(cfg)
        for m in modes:
            ev = ExactEval(mu=args.mu) if m == "exact" else SaEval(args.tau, schedule, seed, args.mu)
            rep = lspi_run(qs, args.beta, args.epsilon, ev, args.max_iters)
            wall[m].extend(r.wall_time for r in rep.iterations)
            res = evaluate_policy_tar(
                cfg, QPolicy(rep.final_theta, fmap, cfg.action_count), args.eval_episodes,
                RngHandle(splitmix64(seed, 0xE7A1)),
            )
            tar_rows.append((seed, m, res.tar, res.mean_cost, len(rep.iterations), rep.converged))
            if out_dir is not None:
                body = rep.to_dict()
                body["config"] = config
                (out_dir / f"report_{m}_seed{seed}.json").write_text(
                    json.dumps(body, sort_keys=True) + "\n", encoding="utf-8"
                )
                with open(out_dir / f"iterations_{m}_seed{seed}.csv", "w", encoding="utf-8") as fh:
                    fh.write(_header("lspi", config))
                    rep.write_csv(fh)
    for m in modes:
        tars = [r[2] for r in tar_rows if r[1] == m]
        iters = [r[4] for r in tar_rows if r[1] == m]
        print(
            f"{m}: mean TAR {np.mean(tars):.1f}, mean iterations {np.mean(iters):.1f}, "
            f"mean eval time per iteration {1e3 * np.mean(wall[m]):.3f} ms"
        )
    if len(modes) == 2:
        mean = {m: np.mean([r[2] for r in tar_rows if r[1] == m]) for m in modes}
        print(f"TAR ratio sa/exact = {mean['sa'] / mean['exact']:.4f}")
    if out_dir is not None:
        with open(out_dir / "tar.csv", "w", encoding="utf-8") as fh:
            fh.write(_header("lspi", config))
            fh.write("seed,mode,tar,mean_cost,iterations,converged\n")
            for s, m, tar, cost, it, conv in tar_rows:
                fh.write(f"{s},{m},{tar},{cost!r},{it},{str(conv).lower()}\n")
        with open(out_dir / "walltime.csv", "w", encoding="utf-8") as fh:
            fh.write(_header("lspi", config))
            fh.write("mode,iterations,mean_iter_ms,total_ms\n")
            for m in modes:
                w = np.array(wall[m])
                fh.write(f"{m},{w.size},{1e3 * w.mean():.4f},{1e3 * w.sum():.4f}\n")
    return EXIT_OK


# ---------------------------------------------------------------------------
# bandit, traffic-collect, ls


def cmd_bandit(args) -> int:
    cfg = BanditConfig(
        dim=args.dim, arms_per_round=args.arms, noise_bound=args.noise_bound, alpha=args.alpha,
        kappa=args.kappa, mu=args.mu, tau=args.tau, rounds=args.rounds, gamma0=args.gamma0,
    )
    hist, theta = flinucb_sa_run(cfg, args.seed, track_norm_diff=not args.no_norm_diff)
    cum = float(hist.cum_regret[-1])
    worst = hist.worst_case_regret
    print(f"cumulative regret {cum:.4f} ({cum / worst if worst else 0.0:.4f} of worst-case linear regret)")
    fh = _open_out(args.out)
    if fh is not None:
        with fh:
            fh.write(_header("bandit", _resolved(args)))
            hist.write_csv(fh)
    return EXIT_OK


def cmd_traffic_collect(args) -> int:
    cfg = _grid_config(args)
    es = _collect(cfg, args.samples, args.seed)
    if not args.out:
        raise UsageError("--out is required")
    _open_out(args.out).close()
    es.save_jsonl(args.out, header=_header("traffic-collect", _resolved(args)))
    if args.save_config:
        cfg.save(args.save_config)
    print(f"wrote {len(es)} transitions from a {cfg.rows}x{cfg.cols} grid to {args.out}")
    return EXIT_OK


def _load_regression(path):
    xs, ys = [], []
    with open(path, encoding="utf-8") as fh:
        for lineno, line in enumerate(fh, start=1):
            if not line.strip() or line.startswith("#"):
                continue
            try:
                rec = json.loads(line)
                xs.append([float(v) for v in rec["x"]])
                ys.append(float(rec["y"]))
            except (json.JSONDecodeError, KeyError, TypeError, ValueError) as exc:
                raise FormatError(f"bad regression record ({exc})", line=lineno) from exc
            if len(xs[-1]) != len(xs[0]):
                raise FormatError("input dimension differs from the first record", line=lineno)
    if not xs:
        raise EmptyPoolError(f"{path} holds no regression records")
    return np.array(xs), np.array(ys)


def cmd_ls(args) -> int:
    if args.data:
        xs, ys = _load_regression(args.data)
    else:
        xs, ys = regression_instance(args.instance_seed, args.dim, args.samples)
    theta_hat = ls_solve(xs, ys)
    mu = min_eigenvalue(xs)
    c = args.c if args.c is not None else args.product / mu
    schedule = StepSchedule.least_squares(c)
    state, traj = run_fls_sa(
        xs, ys, schedule, None, args.steps, args.seed, args.record_every, theta_hat
    )
    params = bd.BoundParams(beta=0.0, mu=mu, c=c, init_dist=float(np.linalg.norm(theta_hat)),
                            sigma=args.sigma, delta=args.delta)
    k2f = None
    try:
        bd.k_ls(params, 1)
        k2f = lambda n: bd.k_ls(params, n)[1] / math.sqrt(n + c)  # noqa: E731
    except RegimeError as exc:
        print(f"note: bound_k2 left empty ({exc})", file=sys.stderr)
    print("theta_ls = " + json.dumps([float(x) for x in theta_hat]))
    print("theta_sa = " + json.dumps([float(x) for x in state.theta]))
    print(f"final norm_diff = {float(np.linalg.norm(state.theta - theta_hat)):.6g}")
    fh = _open_out(args.out)
    if fh is not None:
        with fh:
            fh.write(_header("ls", _resolved(args)))
            traj.write_csv(fh, lambda n: bd.k1_ls(params, n) / math.sqrt(n + c), k2f)
    return EXIT_OK


# ---------------------------------------------------------------------------
# parser


def _mu_arg(s):
    return "auto" if s == "auto" else float(s)


def _add_grid(p):
    p.add_argument("--grid", help="grid geometry, e.g. 2x2")
    p.add_argument("--env-config", help="flat key=value GridConfig file")
    p.add_argument("--samples", type=int, default=10_000, help="pool size T (default 10000)")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="fastlstd",
        description="Randomised LSTD / least-squares solvers, bounds and benchmarks.",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    def add(name, func, help_):
        p = sub.add_parser(name, help=help_, description=help_)
        p.add_argument("--config", help="flat key=value file supplying flag defaults")
        p.add_argument("--seed", type=int, default=0)
        p.add_argument("--out", help="output file (default: stdout summary only)")
        p.set_defaults(func=func)
        return p

    p = add("evaluate", cmd_evaluate, "exact LSTD and/or fLSTD-SA policy evaluation")
    p.add_argument("--transitions", help="JSONL transition file")
    p.add_argument("--env", choices=["traffic", "random"])
    _add_grid(p)
    p.add_argument("--dim", type=int, default=4, help="feature dimension for --env random")
    p.add_argument("--instance-seed", type=int, default=0)
    p.add_argument("--beta", type=float, default=0.9)
    p.add_argument("--mode", choices=["exact", "sa", "both"], default="both")
    p.add_argument("--steps", type=int, default=1000)
    p.add_argument("--schedule", choices=["corollary1", "iterate_averaging", "least_squares"],
                   default="corollary1")
    p.add_argument("--c", type=float, help="step constant (default 1.33/(1-beta)^2)")
    p.add_argument("--alpha", type=float, default=0.75)
    p.add_argument("--mu-reg", type=float, default=0.0, help="regulariser mu (0 = plain)")
    p.add_argument("--average", action="store_true", help="report the averaged iterate")
    p.add_argument("--burn-in", type=int, default=0)
    p.add_argument("--record-every", type=int, default=10)
    p.add_argument("--delta", type=float, default=0.05)

    p = add("bounds", cmd_bounds, "closed-form error bounds and Monte-Carlo envelope checks")
    p.add_argument("--kind", choices=["td", "ia", "ls"], default="td")
    p.add_argument("--transitions", help="JSONL transitions (for --mu auto)")
    p.add_argument("--beta", type=float, default=0.9)
    p.add_argument("--mu", type=_mu_arg, default="auto")
    p.add_argument("--c", type=float)
    p.add_argument("--product", type=float,
                   help="set c from (1-beta)^2 mu c (td/ia) or mu c (ls)")
    p.add_argument("--alpha", type=float, default=0.75)
    p.add_argument("--r-max", type=float, default=1.0)
    p.add_argument("--v-max", type=float)
    p.add_argument("--delta", type=float, default=0.05)
    p.add_argument("--init-dist", type=float, default=0.0)
    p.add_argument("--sigma", type=float, default=1.0)
    p.add_argument("--n", default="10000", help="comma-separated step counts")
    p.add_argument("--monte-carlo", type=int, default=0, metavar="RUNS",
                   help="run RUNS seeds and check the K2 envelope at the last --n")
    p.add_argument("--instance-seed", type=int, default=0)
    p.add_argument("--dim", type=int, default=4)
    p.add_argument("--samples", type=int, default=100)

    p = add("bench", cmd_bench, "per-step cost of fLSTD-SA vs Sherman-Morrison LSTD")
    p.add_argument("--dims", default="256,512,1024,2048")
    p.add_argument("--reps", type=int, default=5)

    p = add("lspi", cmd_lspi, "LSPI and fLSPI-SA on the traffic grid")
    _add_grid(p)
    p.add_argument("--horizon", type=int)
    p.add_argument("--mode", choices=["exact", "sa", "both"], default="both")
    p.add_argument("--beta", type=float, default=0.9)
    p.add_argument("--epsilon", type=float, default=0.1)
    p.add_argument("--tau", type=int, default=500)
    p.add_argument("--c", type=float, help="step constant (default 1.33/(1-beta)^2)")
    p.add_argument("--mu", type=float, default=1.0, help="LSTDQ regulariser")
    p.add_argument("--max-iters", type=int, default=50)
    p.add_argument("--seeds", type=int, default=1, help="number of consecutive seeds")
    p.add_argument("--eval-episodes", type=int, default=10)
    p.add_argument("--out-dir", help="directory for reports and CSVs")

    p = add("bandit", cmd_bandit, "fLinUCB-SA on a synthetic contextual bandit")
    p.add_argument("--dim", type=int, default=5)
    p.add_argument("--arms", type=int, default=10)
    p.add_argument("--rounds", type=int, default=10_000)
    p.add_argument("--tau", type=int, default=20)
    p.add_argument("--alpha", type=float, default=0.1)
    p.add_argument("--kappa", type=float, default=0.1)
    p.add_argument("--mu", type=float, default=1.0)
    p.add_argument("--noise-bound", type=float, default=0.5)
    p.add_argument("--gamma0", type=float, default=1.0)
    p.add_argument("--no-norm-diff", action="store_true")

    p = add("traffic-collect", cmd_traffic_collect, "collect exploratory traffic transitions")
    _add_grid(p)
    p.add_argument("--horizon", type=int)
    p.add_argument("--save-config", help="also write the resolved GridConfig here")

    p = add("ls", cmd_ls, "fLS-SA against the least-squares solution")
    p.add_argument("--data", help='JSONL file of {"x": [...], "y": number} records')
    p.add_argument("--dim", type=int, default=3)
    p.add_argument("--samples", type=int, default=30)
    p.add_argument("--instance-seed", type=int, default=0)
    p.add_argument("--steps", type=int, default=20_000)
    p.add_argument("--c", type=float)
    p.add_argument("--product", type=float, default=1.6, help="mu c when --c is not given")
    p.add_argument("--sigma", type=float, default=1.0)
    p.add_argument("--delta", type=float, default=0.05)
    p.add_argument("--record-every", type=int, default=10)
    return parser


def _apply_config_file(parser, argv):
    """Re-parse with defaults taken from ``--config`` (explicit flags still win)."""
    args = parser.parse_args(argv)
    if not getattr(args, "config", None):
        return args
    try:
        items = read_kv(args.config)
    except OSError as exc:
        raise UsageError(f"cannot read config file {args.config}: {exc.strerror}") from exc
    sub = parser._subparsers._group_actions[0].choices[args.command]
    actions = {a.dest: a for a in sub._actions}
    defaults = {}
    for key, value in items.items():
        dest = key.replace("-", "_")
        if dest not in actions or dest in ("config", "help"):
            raise UsageError(f"unknown key {key!r} in {args.config}")
        act = actions[dest]
        if act.type is not None:
            try:
                defaults[dest] = act.type(value)
            except ValueError as exc:
                raise UsageError(f"bad value for {key} in {args.config}: {value!r}") from exc
        elif isinstance(act, argparse._StoreTrueAction):
            defaults[dest] = parse_bool(value)
        else:
            defaults[dest] = value
    sub.set_defaults(**defaults)
    return parser.parse_args(argv)


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = _apply_config_file(parser, argv)
        return args.func(args)
    except SystemExit as exc:  # argparse: --help is 0, usage errors 2
        return int(exc.code or 0)
    except (UsageError, ConfigurationError, FormatError, EmptyPoolError, ScaleError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except FileNotFoundError as exc:
        print(f"error: no such file: {exc.filename}", file=sys.stderr)
        return EXIT_USAGE
    except OSError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except (RegimeError, SingularityError, SampleSizeError, FastLstdError, ArithmeticError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_NUMERIC


if __name__ == "__main__":
    sys.exit(main())
