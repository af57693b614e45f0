"""Command-line front end: config parsing, subcommands, deterministic CSV.

Exit codes: 0 success, 1 certification failure, 2 usage or configuration
error.  Diagnostics go to stderr; sweep data goes to CSV files only.
"""

from __future__ import annotations

import argparse
import sys

import numpy as np

from .align import alignment_precoders, diagonality_report
from .channel import (
    NetworkConfig,
    build_equivalent_network,
    draw_channel,
    load_deterministic_values,
    naive_extension,
    superposition_extension,
)
from .errors import AlignmentError, ConfigurationError, NoncoiaError
from .link import LinkConfig, ber_sweep, rate_sweep
from .phases import (
    certify_irrational,
    check_phase_plan,
    irrational_core,
    reduced_fractions,
    sample_phase_plan,
)

_KEY_TYPES = {
    "users": int,
    "solver": str,
    "channel": str,
    "channel_file": str,
    "snr_start_db": float,
    "snr_stop_db": float,
    "snr_step_db": float,
    "trials": int,
    "seed": int,
    "phase_denominator": int,
    "loading": str,
    "total_rate": int,
    "out_path": str,
    "workers": int,
}

_DEFAULTS = {
    "users": 3,
    "solver": "closed3",
    "channel": "gaussian",
    "channel_file": None,
    "snr_start_db": 0.0,
    "snr_stop_db": 60.0,
    "snr_step_db": 5.0,
    "trials": 200,
    "seed": 0,
    "phase_denominator": 360,
    "loading": "fh",
    "total_rate": None,
    "out_path": None,
    "workers": 1,
}


def parse_config_file(path: str) -> dict:
    """Flat key=value lines; blank lines and # comments ignored."""
    out = {}
    with open(path, "r", encoding="utf-8") as fh:
        for lineno, line in enumerate(fh, 1):
            line = line.split("#", 1)[0].strip()
            if not line:
                continue
            if "=" not in line:
                raise ConfigurationError(f"{path}:{lineno}: expected key=value")
            key, value = (part.strip() for part in line.split("=", 1))
            if key not in _KEY_TYPES:
                raise ConfigurationError(f"{path}:{lineno}: unknown key {key!r}")
            try:
                out[key] = _KEY_TYPES[key](value)
            except ValueError as exc:
                raise ConfigurationError(f"{path}:{lineno}: bad value for {key}: {exc}")
    return out


def _merge_config(args) -> dict:
    cfg = dict(_DEFAULTS)
    if getattr(args, "config", None):
        cfg.update(parse_config_file(args.config))
    for key in _KEY_TYPES:
        value = getattr(args, key, None)
        if value is not None:
            cfg[key] = value
    _validate(cfg)
    return cfg


def _validate(cfg: dict):
    if cfg["users"] < 3:
        raise ConfigurationError("users must be >= 3")
    if cfg["solver"] not in ("closed3", "leakage", "maxsinr"):
        raise ConfigurationError(f"unknown solver {cfg['solver']!r}")
    if cfg["channel"] not in ("gaussian", "deterministic"):
        raise ConfigurationError(f"unknown channel mode {cfg['channel']!r}")
    if cfg["loading"] not in ("fh", "uniform"):
        raise ConfigurationError(f"unknown loading {cfg['loading']!r}")
    if cfg["snr_step_db"] <= 0:
        raise ConfigurationError("snr_step_db must be positive")
    if cfg["snr_stop_db"] < cfg["snr_start_db"]:
        raise ConfigurationError("snr_stop_db must be >= snr_start_db")
    if cfg["trials"] < 1:
        raise ConfigurationError("trials must be >= 1")
    if cfg["seed"] < 0:
        raise ConfigurationError("seed must be >= 0")
    if cfg["phase_denominator"] < 0:
        raise ConfigurationError("phase_denominator must be >= 0")
    if cfg["workers"] < 1:
        raise ConfigurationError("workers must be >= 1")
    if cfg["total_rate"] is not None and cfg["total_rate"] < 1:
        raise ConfigurationError("total_rate must be >= 1")


def _network(cfg: dict) -> NetworkConfig:
    if cfg["channel"] == "deterministic":
        values = None
        if cfg["channel_file"]:
            values = load_deterministic_values(cfg["channel_file"], cfg["users"])
        return NetworkConfig(cfg["users"], "deterministic", values)
    return NetworkConfig(cfg["users"])


def _snr_grid(cfg: dict) -> tuple:
    start, stop, step = cfg["snr_start_db"], cfg["snr_stop_db"], cfg["snr_step_db"]
    return tuple(np.arange(start, stop + step / 2, step))


def _link_config(cfg: dict) -> LinkConfig:
    return LinkConfig(
        network=_network(cfg),
        solver=cfg["solver"],
        snr_grid_db=_snr_grid(cfg),
        trials=cfg["trials"],
        master_seed=cfg["seed"],
        loading=cfg["loading"],
        total_rate=cfg["total_rate"],
        phase_denominator=cfg["phase_denominator"],
        workers=cfg["workers"],
    )


def _fmt(x) -> str:
    return format(float(x), ".12g")


def _config_comment(cfg: dict) -> str:
    # out_path and workers cannot affect the data: identical experiments must
    # give identical bytes wherever written and at any parallelism level.
    skip = ("out_path", "workers")
    parts = [
        f"{k}={cfg[k]}" for k in sorted(cfg) if cfg[k] is not None and k not in skip
    ]
    return "# config: " + " ".join(parts)


def _write_csv(path: str, comment: str, header: str, rows):
    with open(path, "w", encoding="utf-8", newline="") as fh:
        fh.write(comment + "\n")
        fh.write(header + "\n")
        for row in rows:
            fh.write(",".join(row) + "\n")


def cmd_rate(cfg: dict) -> int:
    report = rate_sweep(_link_config(cfg))
    if report.ia_mean is None:
        raise ConfigurationError("no successful trials; nothing to report")
    out = cfg["out_path"] or "rate.csv"
    curves = {
        "bound": (report.bound, np.zeros(len(report.snr_grid_db))),
        "ia": (report.ia_mean, report.ia_stderr),
        "tdma": (report.tdma_mean, report.tdma_stderr),
    }
    rows = []
    for scheme in sorted(curves):
        mean, err = curves[scheme]
        for s, snr_db in enumerate(report.snr_grid_db):
            rows.append(
                [_fmt(snr_db), scheme, _fmt(mean[s]), _fmt(err[s]), str(int(report.trials_used[s]))]
            )
    _write_csv(out, _config_comment(cfg), "snr_db,scheme,mean_sum_rate_bpcu,stderr,trials", rows)
    return 0


def cmd_ber(cfg: dict) -> int:
    report = ber_sweep(_link_config(cfg))
    out = cfg["out_path"] or "ber.csv"
    rows = []
    for s, snr_db in enumerate(report.snr_grid_db):
        for user in range(report.ber.shape[1]):
            rows.append(
                [
                    _fmt(snr_db),
                    str(user + 1),
                    cfg["loading"],
                    _fmt(report.ber[s, user]),
                    str(int(report.bit_counts[s, user])),
                    str(int(report.error_counts[s, user])),
                ]
            )
    _write_csv(out, _config_comment(cfg), "snr_db,user,loading,ber,bit_count,error_count", rows)
    return 0


def _print_matrix(name: str, mat: np.ndarray):
    body = np.array2string(np.asarray(mat), precision=6, suppress_small=True)
    print(f"{name} =\n{body}")


def _demo_section(title: str, mats) -> None:
    print(f"--- {title} ---")
    try:
        rep = diagonality_report(mats)
    except AlignmentError as exc:
        print(f"degenerate alignment: {exc}")
        print()
        return
    _print_matrix("E", rep.alignment.E)
    _print_matrix("F", rep.alignment.F)
    _print_matrix("G", rep.alignment.G)
    idx, val = rep.alignment.eigenpair_used
    print(f"chosen eigenpair: index {idx}, eigenvalue {val:.6g}")
    for i in range(3):
        verdict = "YES" if rep.min_abs_entries[i] < 1e-12 else "NO"
        print(
            f"V[{i + 1}] = {np.array2string(rep.precoders[i], precision=6)}"
            f"  zero entry: {verdict}"
        )
    print()


def cmd_demo_diagonality(cfg: dict, coherent: bool = False) -> int:
    if cfg["users"] != 3:
        raise ConfigurationError("demo-diagonality requires 3 users")
    network = _network(cfg)
    real = draw_channel(network, cfg["seed"])
    rng = np.random.default_rng(cfg["seed"])
    lambdas = rng.uniform(0.5, 2.0, 3)

    _demo_section("naive 2-symbol extension", naive_extension(real))
    _demo_section(
        f"equal-scaling superposition (lambda = {np.array2string(lambdas, precision=4)})",
        superposition_extension(real, lambdas),
    )

    print("--- noncoherent multi-branch network ---")
    if coherent:
        plan = sample_phase_plan(network, cfg["phase_denominator"], cfg["seed"],
                                 coherent_override=True)
        print("warning: coherent override; plan is non-certified and degenerate")
        try:
            net = build_equivalent_network(real, plan)
            alignment_precoders(net)
        except NoncoiaError as exc:
            print(f"degenerate alignment: {exc}")
            return 0
    for attempt in range(100):
        plan = sample_phase_plan(
            network, cfg["phase_denominator"],
            np.random.SeedSequence([cfg["seed"], attempt]),
        )
        net = build_equivalent_network(real, plan)
        try:
            rep = diagonality_report(net)
        except AlignmentError:
            continue
        for i in range(3):
            verdict = "YES" if rep.min_abs_entries[i] < 1e-12 else "NO"
            print(
                f"V[{i + 1}] = {np.array2string(rep.precoders[i], precision=6)}"
                f"  zero entry: {verdict}"
            )
        print(f"(certified plan found after {attempt + 1} attempt(s))")
        return 0
    print("no certified plan admitted a real alignment within 100 attempts",
          file=sys.stderr)
    return 1


def cmd_certify(cfg: dict) -> int:
    cap = min(cfg["phase_denominator"], 24)
    print(f"{'q':>10}  {'2cos(q)':>16}  {'verdict':<16}  {'polynomial':<32}  core")
    for q in reduced_fractions(cap):
        cert = certify_irrational(q)
        core = irrational_core(cert.polynomial.coeffs)
        if cert.is_irrational:
            verdict = "irrational"
        else:
            verdict = f"rational {cert.rational_value}"
        poly = ",".join(str(c) for c in cert.polynomial.coeffs)
        core_str = ",".join(str(c) for c in core)
        print(f"{str(q):>10}  {2 * q.cos():16.12f}  {verdict:<16}  {poly:<32}  {core_str}")
    if cfg["phase_denominator"] >= 5:
        plan = sample_phase_plan(cfg["users"], cfg["phase_denominator"], cfg["seed"])
        if not check_phase_plan(plan):
            print("sampled plan failed certification", file=sys.stderr)
            return 1
        print(f"sampled plan for {cfg['users']} users: all used angles certified")
    return 0


def _add_common_options(sub: argparse.ArgumentParser):
    sub.add_argument("--config", help="flat key=value config file")
    sub.add_argument("--users", type=int)
    sub.add_argument("--solver", choices=("closed3", "leakage", "maxsinr"))
    sub.add_argument("--channel", choices=("gaussian", "deterministic"))
    sub.add_argument("--channel-file", dest="channel_file")
    sub.add_argument("--snr-start-db", dest="snr_start_db", type=float)
    sub.add_argument("--snr-stop-db", dest="snr_stop_db", type=float)
    sub.add_argument("--snr-step-db", dest="snr_step_db", type=float)
    sub.add_argument("--trials", type=int)
    sub.add_argument("--seed", type=int)
    sub.add_argument("--phase-denominator", dest="phase_denominator", type=int)
    sub.add_argument("--loading", choices=("fh", "uniform"))
    sub.add_argument("--total-rate", dest="total_rate", type=int)
    sub.add_argument("--out", dest="out_path")
    sub.add_argument("--workers", type=int)


def _build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="noncoia",
        description="Noncoherent interference alignment simulator",
    )
    subs = parser.add_subparsers(dest="command", required=True)
    for name, help_text in (
        ("rate", "sum-rate sweep to CSV (schemes: ia, tdma, bound)"),
        ("ber", "bit-error-rate sweep to CSV"),
        ("demo-diagonality", "print the diagonality problem and its resolution"),
        ("certify", "irrationality certificates for rational-multiple-of-pi cosines"),
    ):
        sub = subs.add_parser(name, help=help_text)
        _add_common_options(sub)
        if name == "demo-diagonality":
            sub.add_argument("--coherent", action="store_true",
                             help="use the all-zero coherent plan (control experiment)")
    return parser


def main(argv=None) -> int:
    args = _build_parser().parse_args(argv)
    try:
        cfg = _merge_config(args)
        if args.command == "rate":
            return cmd_rate(cfg)
        if args.command == "ber":
            return cmd_ber(cfg)
        if args.command == "demo-diagonality":
            return cmd_demo_diagonality(cfg, coherent=args.coherent)
        return cmd_certify(cfg)
    except NoncoiaError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    except OSError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
