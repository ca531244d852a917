"""Command-line driver.

Every subcommand writes a deterministic CSV artifact plus a JSON header that
embeds the canonical config (and the only timestamp).  With ``--out STEM``
these go to ``STEM.csv`` and ``STEM.json``; otherwise CSV goes to stdout and
the JSON header to stderr.  ``--format json`` instead writes a single JSON
document holding the header, ``columns`` and ``rows``.

Exit codes: 0 ok, 1 other package error, 2 config error, 3 check failed,
4 resource cap.
"""

from __future__ import annotations

import argparse
import csv
import datetime as _dt
import io
import json
import math
import sys
from dataclasses import fields
from typing import Optional

from . import __version__, _accel
from . import bilinear as B
from . import complete as C
from . import tracefn as T
from .config import COMMANDS, ExperimentConfig, _convert, merge, parse_text
from .errors import CheckFailed, ConfigError, ExpSumsError, ResourceCap
from .ffield import build_extension, build_prime_field, is_prime, prime_factors

EXIT_OK, EXIT_ERROR, EXIT_CONFIG, EXIT_CHECK, EXIT_CAP = 0, 1, 2, 3, 4


def field_of_size(q: int):
    """Prime field for prime ``q``, otherwise the degree-n extension of ``F_p``."""
    if q < 2:
        raise ConfigError(f"bad field size {q}", field="q")
    if is_prime(q):
        return build_prime_field(q)
    ps = prime_factors(q)
    if len(ps) != 1:
        raise ConfigError(f"{q} is not a prime power", field="q")
    p = ps[0]
    n = round(math.log(q, p))
    return build_extension(build_prime_field(p), n)


class Artifact:
    """Collects CSV rows and a JSON header for one run."""

    def __init__(self, cfg: ExperimentConfig, header: list):
        self.cfg = cfg
        self.header = header
        self.rows: list = []
        self.summary: dict = {}
        self.warnings: list = []

    def add(self, row):
        self.rows.append([x.item() if hasattr(x, "item") else x for x in row])

    def csv_text(self) -> str:
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(self.header)
        w.writerows([_cell(x) for x in row] for row in self.rows)
        return buf.getvalue()

    def json_header(self) -> dict:
        return {
            "tool": "expsums",
            "version": __version__,
            "backend": _accel.BACKEND,
            "timestamp": _dt.datetime.now(_dt.timezone.utc).isoformat(timespec="seconds"),
            "config": self.cfg.canonical(),
            "calibration": self.cfg.calibration.as_dict(),
            "warnings": self.warnings,
            "summary": self.summary,
        }


def _cell(x):
    if hasattr(x, "item"):
        x = x.item()
    if isinstance(x, bool):
        return "true" if x else "false"
    if isinstance(x, float):
        return repr(x)
    return x


def _jsonable(x):
    if isinstance(x, float) and not math.isfinite(x):
        return str(x)
    if isinstance(x, dict):
        return {str(k): _jsonable(v) for k, v in x.items()}
    if isinstance(x, (list, tuple)):
        return [_jsonable(v) for v in x]
    if isinstance(x, complex):
        return {"re": x.real, "im": x.imag}
    if hasattr(x, "item"):
        return _jsonable(x.item())
    return x


def _emit(art: Artifact, out: Optional[str], stdout, stderr):
    if art.cfg.format == "json":
        # one document: the header plus the rows
        doc = dict(art.json_header(), columns=art.header, rows=art.rows)
        text = json.dumps(_jsonable(doc), indent=2, sort_keys=True) + "\n"
        if out:
            with open(out + ".json", "w") as fh:
                fh.write(text)
        else:
            stdout.write(text)
        for w in art.warnings:
            stderr.write(f"warning: {w}\n")
        return
    head = json.dumps(_jsonable(art.json_header()), indent=2, sort_keys=True)
    if out:
        with open(out + ".csv", "w", newline="") as fh:
            fh.write(art.csv_text())
        with open(out + ".json", "w") as fh:
            fh.write(head + "\n")
    else:
        stdout.write(art.csv_text())
        stderr.write(head + "\n")
    for w in art.warnings:
        stderr.write(f"warning: {w}\n")


def _kernel(cfg: ExperimentConfig, q: int) -> T.TraceTable:
    ctx = field_of_size(q)
    try:
        return T.build_kernel(cfg.kernel, ctx, method=cfg.conv)
    except ExpSumsError:
        raise
    except ValueError as exc:  # malformed identifier
        raise ConfigError(str(exc), field="kernel") from None


def _size(explicit: Optional[int], exp: Optional[float], q: int, name: str) -> int:
    if explicit is not None:
        return explicit
    if exp is not None:
        return max(1, math.ceil(q**exp))
    raise ConfigError(f"give {name} or {name.lower()}exp", field=name)


# ---------------------------------------------------------------------------
# subcommands


def cmd_kernel_dump(cfg, stdout, stderr) -> int:
    qs = cfg.primes()
    if len(qs) != 1:
        raise ConfigError("kernel-dump takes a single q", field="q")
    K = _kernel(cfg, qs[0])
    info = dict(q=K.q, kernel=K.label, rank=K.rank, sup_norm=K.sup_norm, purity_ok=K.purity_ok(),
                realness_ok=K.realness_ok(), at_infinity=K.at_infinity)
    if cfg.format == "binary":
        data = K.to_bytes()
        if cfg.out:
            with open(cfg.out + ".bin", "wb") as fh:
                fh.write(data)
        else:
            getattr(stdout, "buffer", stdout).write(data)
        art = Artifact(cfg, [])
        art.summary = info
        stderr.write(json.dumps(_jsonable(art.json_header()), indent=2, sort_keys=True) + "\n")
        return EXIT_OK
    art = Artifact(cfg, ["u", "re", "im"])
    for u, z in enumerate(K.values):
        art.add([u, float(z.real), float(z.imag)])
    art.summary = info
    _emit(art, cfg.out, stdout, stderr)
    return EXIT_OK


def cmd_survey(cfg, stdout, stderr) -> int:
    vs = [f"v_{i + 1}" for i in range(2 * cfg.l)]
    art = Artifact(cfg, ["q"] + vs + ["re", "im", "abs", "exponent", "bucket", "tier", "diagonal_flag"])
    per_q = []
    for q in cfg.primes():
        K = _kernel(cfg, q)
        res = C.diagonal_survey(K, cfg.l, cfg.c, cfg.mode or "sample", cfg.samples, cfg.seed,
                                kind=cfg.kind, d=cfg.d, calib=cfg.calibration)
        for r in res.reports + res.diagonal_reports:
            art.add([q, *r.v, float(r.value.real), float(r.value.imag), abs(r.value), r.exponent,
                     r.bucket, r.tier, r.diagonal_flag])
        per_q.append(res.summary())
    art.summary = {"surveys": per_q}
    _emit(art, cfg.out, stdout, stderr)
    return EXIT_OK


def cmd_sop(cfg, stdout, stderr) -> int:
    us = [f"u_{i + 1}" for i in range(2 * cfg.l)]
    art = Artifact(cfg, ["q"] + us + ["re", "im", "abs", "exponent", "diagonal_flag"])
    calib = cfg.calibration
    per_q = []
    for q in cfg.primes():
        K = _kernel(cfg, q)
        gen, vals, diag, dvals = C.sop_survey(K, cfg.l, cfg.samples, cfg.seed)
        for flag, ts, vv in ((False, gen, vals), (True, diag, dvals)):
            for t, z in zip(ts.tolist(), vv):
                art.add([q, *t, float(z.real), float(z.imag), abs(z), C.exponent_of(z, q, calib.zero_tol), flag])
        frac = float((abs(vals) <= calib.sop_mult * math.sqrt(q)).mean()) if len(vals) else 1.0
        dmin = float(dvals.real.min()) if len(dvals) else float("inf")
        per_q.append(dict(q=q, generic_fraction_within=frac, diagonal_min_over_q=dmin / q))
    art.summary = {"sweeps": per_q, "sop_mult": calib.sop_mult}
    _emit(art, cfg.out, stdout, stderr)
    return EXIT_OK


def cmd_moments(cfg, stdout, stderr) -> int:
    art = Artifact(cfg, ["q", "kind", "l", "m", "field_size", "direct", "exchanged", "rel_err", "bound",
                         "bound_ratio", "agrees"])
    ok = True
    for q in cfg.primes():
        K = _kernel(cfg, q)
        if cfg.kind == "I":
            rep = C.moment_sigma_I(K, cfg.l, cfg.m, cfg.n_ext, cfg.c)
        else:
            rep = C.moment_sigma_II(K, cfg.l, cfg.m, cfg.n_ext, cfg.c, cfg.d)
        ok &= rep.agrees
        art.add([q, rep.kind, rep.l, rep.m, rep.field_size, rep.direct, rep.exchanged, rep.rel_err, rep.bound,
                 rep.bound_ratio, rep.agrees])
    art.summary = {"exchange_identity_holds": ok}
    _emit(art, cfg.out, stdout, stderr)
    if not ok:
        raise CheckFailed("direct and exchanged moments disagree beyond 1e-6")
    return EXIT_OK


def _coeffs(kind: str, M: int, seed: int) -> B.CoefSeq:
    return B.CoefSeq.generate(kind, M, seed)


def _bilinear_row(cfg: ExperimentConfig, q: int, mode: str):
    """One schedule entry: (csv row, warnings, summary value)."""
    M, N = _size(cfg.M, cfg.mexp, q, "M"), _size(cfg.N, cfg.nexp, q, "N")
    K = _kernel(cfg, q)
    if mode == "opnorm":
        res = B.operator_norm(K, cfg.b, cfg.c, M, N, cfg.iters, cfg.seed)
        warns = [] if res.converged else [f"q={q}: power iteration stopped after {res.iterations} steps"]
        return [q, M, N, res.sigma_max, res.ratio, res.converged, res.iterations], warns, res.ratio
    if cfg.coeffs == "singular":
        alpha, beta = B.singular_vector_coeffs(K, cfg.b, cfg.c, M, N, cfg.iters, cfg.seed)
    else:
        alpha, beta = _coeffs(cfg.coeffs, M, cfg.seed), _coeffs(cfg.coeffs, N, cfg.seed + 1)
    if mode == "type1":
        rep = B.type1_sum(K, cfg.b, cfg.c, alpha, N, cfg.l)
    else:
        rep = B.type2_sum(K, cfg.b, cfg.c, alpha, beta, cfg.l)
    row = [q, M, N, float(rep.value.real), float(rep.value.imag), abs(rep.value), rep.trivial_bound,
           rep.ratio, rep.bound_rhs, rep.constant_estimate]
    return row, [f"q={q}: {w}" for w in rep.warnings], rep.constant_estimate


def _schedule_map(fn, cfg: ExperimentConfig, qs, *args) -> list:
    """``fn(cfg, q, *args)`` for every prime, in schedule order."""
    if cfg.workers <= 1 or len(qs) <= 1:
        return [fn(cfg, q, *args) for q in qs]
    from concurrent.futures import ProcessPoolExecutor

    n = len(qs)
    with ProcessPoolExecutor(max_workers=min(cfg.workers, n)) as pool:
        return list(pool.map(fn, [cfg] * n, qs, *([a] * n for a in args)))


def cmd_bilinear(cfg, stdout, stderr) -> int:
    mode = cfg.mode or "opnorm"
    qs = cfg.primes()
    if mode == "opnorm":
        art = Artifact(cfg, ["q", "M", "N", "sigma_max", "ratio", "converged", "iterations"])
    else:
        art = Artifact(cfg, ["q", "M", "N", "re", "im", "abs", "trivial", "ratio", "bound_rhs",
                             "constant_estimate"])
    values = []
    for row, warns, val in _schedule_map(_bilinear_row, cfg, qs, mode):
        art.add(row)
        art.warnings.extend(warns)
        values.append(val)
    if mode == "opnorm":
        art.summary = {"ratios": values, "slope": B.fit_slope(qs, values) if len(qs) > 1 else None}
    else:
        art.summary = {"constant_estimates": values}
    art.summary["mode"] = mode
    _emit(art, cfg.out, stdout, stderr)
    return EXIT_OK


def cmd_trilinear(cfg, stdout, stderr) -> int:
    art = Artifact(cfg, ["q", "J", "M", "N", "direct_re", "direct_im", "contraction_re", "contraction_im",
                         "rel_err", "xi_l1", "xi_l2sq_const", "zeta_l2sq_const"])
    ok = True
    for q in cfg.primes():
        J = cfg.J if cfg.J is not None else _size(None, cfg.mexp, q, "M")
        M, N = _size(cfg.M, cfg.mexp, q, "M"), _size(cfg.N, cfg.nexp, q, "N")
        rep = B.xi_zeta(_kernel(cfg, q), cfg.a, cfg.b, cfg.c, _coeffs(cfg.coeffs, J, cfg.seed),
                        _coeffs(cfg.coeffs, M, cfg.seed + 1), _coeffs(cfg.coeffs, N, cfg.seed + 2),
                        cfg.calibration)
        ok &= rep.identity_ok
        n = rep.norms
        art.add([q, J, M, N, rep.direct.real, rep.direct.imag, rep.contraction.real, rep.contraction.imag,
                 rep.rel_err, n["xi_l1"], n["xi_l2sq_const"], n["zeta_l2sq_const"]])
    art.summary = {"identity_holds": ok}
    _emit(art, cfg.out, stdout, stderr)
    if not ok:
        raise CheckFailed("trilinear contraction disagrees with the direct sum")
    return EXIT_OK


def cmd_holder(cfg, stdout, stderr) -> int:
    art = Artifact(cfg, ["q", "kind", "M", "N", "V", "lhs", "rhs", "ratio", "box_sum", "n_box", "box_mode"])
    reports = []
    for q in cfg.primes():
        M, N = _size(cfg.M, cfg.mexp, q, "M"), _size(cfg.N, cfg.nexp, q, "N")
        V = cfg.V if cfg.V is not None else max(1, N // 10)
        alpha = _coeffs(cfg.coeffs, M, cfg.seed)
        beta = _coeffs(cfg.coeffs, N, cfg.seed + 1) if cfg.kind == "II" else None
        rep = B.holder_chain_report(_kernel(cfg, q), cfg.b, cfg.c, cfg.l, alpha, N, V, beta, cfg.d,
                                    cfg.samples, cfg.seed, cfg.calibration)
        reports.append(rep.to_json())
        art.add([q, rep.kind, M, N, V, rep.lhs, rep.rhs, rep.ratio, rep.box_sum, rep.n_box, rep.box_mode])
    art.summary = {"reports": reports}
    _emit(art, cfg.out, stdout, stderr)
    return EXIT_OK


def cmd_nu(cfg, stdout, stderr) -> int:
    keys = ["r", "s"] if cfg.kind == "I" else ["r", "s1", "s2"]
    art = Artifact(cfg, ["q"] + keys + ["weight"])
    reports, ok = [], True
    for q in cfg.primes():
        M, N = _size(cfg.M, cfg.mexp, q, "M"), _size(cfg.N, cfg.nexp, q, "N")
        alpha = _coeffs(cfg.coeffs, M, cfg.seed)
        if cfg.kind == "I":
            rep = B.nu_table(q, cfg.b, cfg.c, alpha, N, cfg.U, cfg.V or 1, cfg.calibration)
        else:
            U = cfg.U if cfg.U is not None else B.default_U(N, cfg.V or 1)
            rep = B.nu2_table(q, cfg.b, cfg.c, alpha, N, U, cfg.calibration)
        ok &= rep.mass_ok
        for k in sorted(rep.table):
            art.add([q, *k, rep.table[k]])
        reports.append(dict(q=q, M=M, N=N, l1=rep.l1, l2sq=rep.l2sq, mass_expected=rep.mass_expected,
                            mass_ok=rep.mass_ok, bounds=rep.bounds))
    art.summary = {"tables": reports}
    _emit(art, cfg.out, stdout, stderr)
    if not ok:
        raise CheckFailed("nu table mass identity failed")
    return EXIT_OK


def cmd_goursat(cfg, stdout, stderr) -> int:
    from . import goursat as Gs

    demos = Gs.demo_instances()
    if cfg.demo != "all":
        demos = [d for d in demos if d.name == cfg.demo]
        if not demos:
            raise ConfigError(f"unknown demo {cfg.demo!r}", field="demo")
    art = Artifact(cfg, ["demo", "order", "perfect", "center_order", "quasisimple", "H1", "H2",
                         "quotient_order", "coinvariant_dim", "holds"])
    certs, ok = [], True
    for d in demos:
        cert = Gs.group_certificate(d.G)
        cert["demo"] = d.name
        datum = Gs.goursat_datum(d.G, *d.factors).summary() if len(d.factors) == 2 else None
        cert["datum"] = datum
        dims, holds = [], None
        if d.reps is not None:
            v = Gs.gkr_check(d.G, d.factors, d.reps, d.cores)
            dims = [v.coinvariant_dim]
            holds = v.holds and (d.expected_dim is None or v.coinvariant_dim == d.expected_dim)
            cert["verdict"] = v.to_json()
            ok &= holds
        cert["coinvariant_dims"] = dims
        certs.append(cert)
        art.add([d.name, cert["order"], cert["perfect"], cert["center_order"], cert["quasisimple"],
                 datum["|H1|"] if datum else "", datum["|H2|"] if datum else "",
                 datum["quotient_order"] if datum else "", dims[0] if dims else "",
                 "" if holds is None else holds])
    art.summary = {"certificates": certs}
    _emit(art, cfg.out, stdout, stderr)
    if not ok:
        raise CheckFailed("coinvariant dichotomy failed on a demo instance")
    return EXIT_OK


def cmd_selftest(cfg, stdout, stderr) -> int:
    from . import selftest

    results = selftest.run(quick=cfg.quick)
    for r in results:
        stdout.write(f"[{'PASS' if r.ok else 'FAIL'}] {r.tier:5s} {r.name}: {r.detail}\n")
    bad = sum(not r.ok for r in results)
    stdout.write(f"{len(results) - bad}/{len(results)} checks passed (backend {_accel.BACKEND})\n")
    return EXIT_CHECK if bad else EXIT_OK


def cmd_acceptance(cfg, stdout, stderr) -> int:
    from . import acceptance

    results = acceptance.run_all()
    for r in results:
        stdout.write(r.line() + "\n")
    bad = sum(not r.ok for r in results)
    stdout.write(f"{len(results) - bad}/{len(results)} criteria passed\n")
    return EXIT_CHECK if bad else EXIT_OK


HANDLERS = {
    "kernel-dump": cmd_kernel_dump,
    "survey-cancel": cmd_survey,
    "sop": cmd_sop,
    "moments": cmd_moments,
    "bilinear": cmd_bilinear,
    "trilinear": cmd_trilinear,
    "holder": cmd_holder,
    "nu": cmd_nu,
    "goursat": cmd_goursat,
    "selftest": cmd_selftest,
    "acceptance": cmd_acceptance,
}
assert set(HANDLERS) == set(COMMANDS)


# ---------------------------------------------------------------------------
# argument parsing


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        raise ConfigError(message)


def build_parser() -> argparse.ArgumentParser:
    common = _Parser(add_help=False)
    common.add_argument("--config", help="key = value file; flags override it")
    for f in fields(ExperimentConfig):
        if f.name in ("command", "calib"):
            continue
        flag = "--" + f.name.replace("_", "-")
        if f.name == "quick":
            common.add_argument(flag, action="store_const", const="true", dest=f.name, default=None)
        else:
            common.add_argument(flag, dest=f.name, default=None, metavar="VALUE")
    common.add_argument("--calib", action="append", default=[], metavar="NAME=VALUE",
                        help="override a calibration constant")
    p = _Parser(prog="expsums", description="Experiments on complete and incomplete exponential sums.")
    p.add_argument("--version", action="version", version=f"expsums {__version__}")
    sub = p.add_subparsers(dest="command", required=True, parser_class=_Parser)
    for name in COMMANDS:
        sub.add_parser(name, parents=[common])
    return p


def config_from_args(argv) -> ExperimentConfig:
    args = build_parser().parse_args(argv)
    base: dict = {}
    if args.config:
        try:
            with open(args.config) as fh:
                base = parse_text(fh.read())
        except OSError as exc:
            raise ConfigError(f"cannot read config file: {exc}", field="config") from None
        if base.get("command", args.command) != args.command:
            raise ConfigError(f"config file is for {base['command']!r}", field="command")
    over: dict = {"command": args.command}
    for f in fields(ExperimentConfig):
        if f.name in ("command", "calib"):
            continue
        raw = getattr(args, f.name)
        if raw is not None:
            over[f.name] = _convert(f.name, raw)
    calib = {}
    for item in args.calib:
        if "=" not in item:
            raise ConfigError(f"expected NAME=VALUE, got {item!r}", field="calib")
        name, val = (s.strip() for s in item.split("=", 1))
        calib[name] = _convert("calib." + name, val)
    if calib:
        over["calib"] = tuple(sorted(calib.items()))
    return merge(base, over)


def run(cfg: ExperimentConfig, stdout=None, stderr=None) -> int:
    stdout = sys.stdout if stdout is None else stdout
    stderr = sys.stderr if stderr is None else stderr
    return HANDLERS[cfg.command](cfg, stdout, stderr)


def main(argv=None, stdout=None, stderr=None) -> int:
    stderr = sys.stderr if stderr is None else stderr
    try:
        cfg = config_from_args(sys.argv[1:] if argv is None else argv)
        return run(cfg, stdout, stderr)
    except ConfigError as exc:
        stderr.write(f"config error: {exc}\n")
        return EXIT_CONFIG
    except CheckFailed as exc:
        stderr.write(f"check failed: {exc}\n")
        return EXIT_CHECK
    except ResourceCap as exc:
        stderr.write(f"resource cap: {type(exc).__name__}: {exc}\n")
        return EXIT_CAP
    except ExpSumsError as exc:
        stderr.write(f"error: {type(exc).__name__}: {exc}\n")
        return EXIT_ERROR


if __name__ == "__main__":
    sys.exit(main())
