"""Command-line harness: run check suites, emit reports, dump operators."""

from __future__ import annotations

import argparse
import json
import logging
import random
import re
import sys
import time
from dataclasses import asdict, dataclass, field as dc_field

from . import __version__
from .currents import (DEFAULT_DELTA_PARSE, DELTA_PARSES, LABELS, canonical_label,
                       check_defining_relations, check_ope, coproduct_cartan, frenkel_jing,
                       make_field)
from .fock import BasisCache, basis_enumerate, default_cache_dir
from .integrability import (check_collapse, check_diff_eq_fused, check_diff_eq_single,
                            check_pole_structure, check_vanishing, collapse_product)
from .parafermion import (COUPLING_DENOMINATORS, DEFAULT_V, INDEXINGS, big_v,
                          check_anticommutator, check_commutant, check_complementarity,
                          check_coupling, check_exchange, check_factorization, check_fermions,
                          check_multi_exchange, check_parafermion_commutator, check_same_index,
                          check_survivor_counts, check_unity, parafermion_component,
                          x_component)
from .report import RelationReport
from .scalar import DEFAULT_Q, DEFAULT_TOL, numeric_eval
from .vertexcalc import FFVO, contract

log = logging.getLogger("qcurrents")

SUITES = ("relations", "ope", "diffeq", "integrable", "parafermion")
BACKENDS = ("exact", "numeric", "both")
CAPS = {"m_exact": 2, "m_numeric": 3, "N": 6, "W": 4, "K": 12}


class ConfigError(ValueError):
    """Run parameters are invalid or exceed the resource caps."""


class UnknownOperator(KeyError):
    """``dump-operator`` was given a name it cannot build."""


@dataclass
class RunConfig:
    suite: str = "all"
    m: int = 0
    sectors: list = dc_field(default_factory=lambda: [0, 1])
    N: int = 3
    W: int = 2
    K: int | None = None
    backend: str = "exact"
    q: complex = DEFAULT_Q
    seed: int = 0
    report: str = "text"
    cache_dir: str | None = None
    delta_parse: str = DEFAULT_DELTA_PARSE
    coupling_denominator: str = "k"
    indexing: str = "reflected"
    force: bool = False

    @property
    def D(self) -> int:
        return 2 * (self.m + 1)

    @property
    def L(self) -> int:
        return self.m + 1

    def validate(self) -> "RunConfig":
        if self.suite != "all" and self.suite not in SUITES:
            raise ConfigError(f"unknown suite {self.suite!r}")
        if self.backend not in BACKENDS:
            raise ConfigError(f"unknown backend {self.backend!r}")
        if self.delta_parse not in DELTA_PARSES:
            raise ConfigError("delta parse must be 'a' or 'b'")
        if self.coupling_denominator not in COUPLING_DENOMINATORS:
            raise ConfigError(f"coupling denominator must be one of {COUPLING_DENOMINATORS}")
        if self.indexing not in INDEXINGS:
            raise ConfigError(f"indexing must be one of {INDEXINGS}")
        if self.m < 0 or self.N < 0 or self.W < 0 or (self.K is not None and self.K < 1):
            raise ConfigError("m, degree and window must be non-negative, kmax positive")
        if self.q == 0:
            raise ConfigError("q sample must be nonzero")
        if self.m == 0:
            if not self.sectors or any(s not in (0, 1) for s in self.sectors):
                raise ConfigError("level-one sectors are 0 and 1")
        elif len(self.sectors) != self.m + 1 or any(s not in (0, 1) for s in self.sectors):
            raise ConfigError(f"need {self.m + 1} slot sectors in {{0, 1}}")
        if not self.force:
            m_cap = CAPS["m_exact"] if self.backend != "numeric" else CAPS["m_numeric"]
            over = [f"m={self.m} > {m_cap}"] if self.m > m_cap else []
            over += [f"{k}={v} > {CAPS[k]}" for k, v in (("N", self.N), ("W", self.W), ("K", self.K))
                     if v is not None and v > CAPS[k]]
            if over:
                raise ConfigError("over resource caps (use --force): " + ", ".join(over))
        return self

    def echo(self) -> dict:
        d = asdict(self)
        d["q"] = [self.q.real, self.q.imag]
        d["D"], d["L"] = self.D, self.L
        return d


# ---------------------------------------------------------------------------
# cross-backend comparison
# ---------------------------------------------------------------------------

def _close(a: complex, b: complex, tol: float) -> bool:
    return abs(a - b) <= tol * max(1.0, abs(a), abs(b))


def compare_backends(exact: RelationReport, numeric: RelationReport, q: complex = DEFAULT_Q,
                     tol: float = DEFAULT_TOL) -> RelationReport:
    """Every exact scalar recorded by ``exact`` evaluates to the numeric run's value.

    A location the numeric run dropped counts as zero there.  Locations only
    the numeric run kept (exact value zero, numeric roundoff) are listed in
    the notes with their largest magnitude rather than failed.
    """
    rep = RelationReport("cross_backend", {"check": exact.check_id, "q": [q.real, q.imag],
                                           "tol": tol})
    if exact.values is None or numeric.values is None:
        raise ValueError("both reports need record_values=True")
    for loc in sorted(exact.values):
        got = numeric.values.get(loc, (0j, 0j))
        for side, a, b in zip(("lhs", "rhs"), exact.values[loc], got):
            x = numeric_eval(a, q)
            y = complex(b)
            rep.record(f"{side} {loc}", _close(x, y, tol), x, y)
    extra = [max(abs(complex(v)) for v in numeric.values[loc])
             for loc in set(numeric.values) - set(exact.values)]
    rep.notes["numeric_only_locations"] = len(extra)
    rep.notes["numeric_only_max_abs"] = max(extra, default=0.0)
    return rep.finish()


def _paired(cfg: RunConfig, run) -> list:
    """Run ``run(field, record_values)`` on the configured backend(s)."""
    if cfg.backend == "exact":
        return [run(make_field(cfg.m), False)]
    numeric_field = make_field(cfg.m, "numeric", cfg.q)
    if cfg.backend == "numeric":
        return [run(numeric_field, False)]
    ex = run(make_field(cfg.m), True)
    nu = run(numeric_field, True)
    return [ex, nu, compare_backends(ex, nu, cfg.q)]


# ---------------------------------------------------------------------------
# suites
# ---------------------------------------------------------------------------

def suite_relations(cfg: RunConfig) -> list:
    groups = [[s] for s in cfg.sectors] if cfg.m == 0 else [cfg.sectors]
    out = []
    for sectors in groups:
        out += _paired(cfg, lambda f, rv: check_defining_relations(
            cfg.m, sectors, cfg.N, cfg.W, field=f, K=cfg.K, delta_parse=cfg.delta_parse,
            record_values=rv))
    return out


def suite_ope(cfg: RunConfig) -> list:
    ope_cfg = RunConfig(**{**asdict(cfg), "m": 0})
    return _paired(ope_cfg, lambda f, rv: check_ope(cfg.N, cfg.W, field=f, K=cfg.K,
                                                    record_values=rv))


def suite_diffeq(cfg: RunConfig) -> list:
    K = cfg.K or 8
    out = []
    for sign in "+-":
        out.append(check_diff_eq_single(sign, cfg.N, cfg.W, K=K))
        if cfg.m >= 1:
            out.append(check_diff_eq_fused(sign, cfg.m, min(cfg.N, 2), cfg.W, K=K))
    return out


def suite_integrable(cfg: RunConfig) -> list:
    K = cfg.K or 8
    out = [check_collapse(cfg.m, K=K)]
    for sign in "+-":
        out.append(check_pole_structure(cfg.m, min(cfg.N, 3), cfg.W, sign))
        out.append(check_vanishing(cfg.m, min(cfg.N, 2), sign, K=K, W=cfg.W))
    return out


def suite_parafermion(cfg: RunConfig) -> list:
    m, ix = cfg.m, cfg.indexing
    if m == 0:
        return [check_coupling(0, K=cfg.K or 12, denominator=cfg.coupling_denominator,
                               indexing=ix)]
    K = cfg.K or 8
    out = [check_coupling(m, K=cfg.K or 12, denominator=cfg.coupling_denominator, indexing=ix),
           check_commutant(m, K=cfg.K or 12, indexing=ix),
           check_factorization(m, K=K, indexing=ix),
           check_survivor_counts(m, K=K, indexing=ix),
           check_unity(m, K=K, indexing=ix),
           check_exchange(m, "X", K=K, indexing=ix),
           check_exchange(m, "phi", K=K, indexing=ix),
           check_same_index(m, K=K)]
    out += [check_complementarity(m, N, K=K, indexing=ix) for N in range(m)]
    for N in range(m):
        for M in range(m):
            out.append(check_multi_exchange(m, N, M, K=K, indexing=ix))
    if m == 1:
        out += [check_fermions(K=K, indexing=ix), check_anticommutator(indexing=ix)]
    N, W = min(cfg.N, 2), min(cfg.W, 2)
    run = lambda backend, rv: check_parafermion_commutator(  # noqa: E731
        m, N, W, backend=backend, q=cfg.q, indexing=ix, delta_reading=cfg.delta_parse,
        record_values=rv)
    if cfg.backend == "both" and m <= 1:
        ex, nu = run("exact", True), run("numeric", True)
        out += [ex, nu, compare_backends(ex, nu, cfg.q)]
    else:
        backend = cfg.backend if cfg.backend != "both" else "numeric"
        if backend == "exact" and m > 1:
            backend = "numeric"
        out.append(run(backend, False))
    return out


SUITE_RUNNERS = {"relations": suite_relations, "ope": suite_ope, "diffeq": suite_diffeq,
                 "integrable": suite_integrable, "parafermion": suite_parafermion}


def _warm_cache(cfg: RunConfig) -> RelationReport | None:
    """Load or build the cached basis and check it against a fresh enumeration."""
    if not cfg.cache_dir:
        return None
    cache = BasisCache(cfg.cache_dir)
    rep = RelationReport("basis_cache", {"directory": cfg.cache_dir})
    groups = [[s] for s in cfg.sectors] if cfg.m == 0 else [cfg.sectors]
    for sectors in groups:
        (basis, _table), hit = cache.load_or_build(make_field(cfg.m), cfg.m, sectors, cfg.N)
        rep.record(f"sectors {sectors}", list(basis) == basis_enumerate(cfg.m, sectors, cfg.N),
                   len(basis), "fresh enumeration")
        rep.notes[str(sectors)] = "hit" if hit else "built"
    return rep.finish()


def conventions(cfg: RunConfig) -> dict:
    return {
        "delta_parse": cfg.delta_parse,
        "coupling_denominator": cfg.coupling_denominator,
        "indexing": cfg.indexing,
        "V": {k: str(v) for k, v in asdict(DEFAULT_V).items()},
        "heisenberg_coproduct_weight": "q^{-(m-2(j-1))|k|/2} on slot j for both signs of k",
        "ope_reading": "resolved",
        "fused_lowering_spacings": "2m, 2m-2, ..., 0",
    }


def run(cfg: RunConfig) -> dict:
    """Execute the selected suites in dependency order and assemble the report document."""
    cfg.validate()
    random.seed(cfg.seed)
    t0 = time.perf_counter()
    reports = []
    warm = _warm_cache(cfg)
    if warm is not None:
        reports.append(warm)
    names = SUITES if cfg.suite == "all" else (cfg.suite,)
    for name in names:
        for rep in SUITE_RUNNERS[name](cfg):
            rep.params.setdefault("suite", name)
            reports.append(rep)
    failed = sum(r.status == "fail" for r in reports)
    return {
        "version": __version__,
        "config": cfg.echo(),
        "reports": [r.to_dict() for r in reports],
        "conventions": conventions(cfg),
        "summary": {"checks": len(reports), "failed": failed, "passed": failed == 0},
        "runtime_ms": round((time.perf_counter() - t0) * 1000),
    }


def render_text(doc: dict) -> str:
    lines = []
    for r in doc["reports"]:
        extra = " (truncated certification)" if r["truncated"] else ""
        lines.append(f"[{r['status'].upper()}] {r['check_id']}: {r['assertions']} assertions, "
                     f"{r['failure_count']} failures{extra}")
        for f in r["failures"][:5]:
            lines.append(f"    {f['location']}: {f['lhs']} != {f['rhs']}")
    s = doc["summary"]
    lines.append(f"{s['checks'] - s['failed']}/{s['checks']} checks passed "
                 f"in {doc['runtime_ms']} ms")
    return "\n".join(lines)


# ---------------------------------------------------------------------------
# operator dumps
# ---------------------------------------------------------------------------

_COMPONENT = re.compile(r"^(X|phi)([+-])_(\d+)$")
_CONTRACT = re.compile(r"^contract\((.+),(.+)\)$")


def build_operator(name: str, m: int = 0, K: int = 8):
    """FFVO or ScalarSeries named by ``name``.

    Accepted: ``identity``, ``x+ x- phi psi`` (level one), ``Phi Psi`` (fused
    Cartan currents), ``V+ V-``, ``fused+ fused-``, ``X+_i``, ``phi+_i``
    (and their ``-`` forms), and ``contract(A,B)`` of any two of these.
    """
    name = name.strip()
    f = make_field(m)
    hit = _CONTRACT.match(name.replace(" ", ""))
    if hit:
        return contract(build_operator(hit.group(1), m, K), build_operator(hit.group(2), m, K))
    if name == "identity":
        return FFVO.identity(f, m + 1, K)
    if name in ("V+", "V-"):
        return big_v(name[1], m, f, K)
    if name in ("fused+", "fused-"):
        return collapse_product(name[-1], m, f, K).op
    if name in ("Phi", "Psi"):
        return coproduct_cartan(name.lower(), m, f, K)
    hit = _COMPONENT.match(name)
    if hit:
        kind, sign, i = hit.group(1), hit.group(2), int(hit.group(3))
        if not 1 <= i <= m + 1:
            raise UnknownOperator(f"component {i} out of range 1..{m + 1}")
        build = x_component if kind == "X" else parafermion_component
        return build(sign, m, i, f, K)
    try:
        label = canonical_label(name)
    except (KeyError, ValueError):
        raise UnknownOperator(name) from None
    if m != 0:
        raise UnknownOperator(f"{name} is a level-one current; use --level-m 0")
    return frenkel_jing(label, f, K)


def dump_operator(name: str, m: int = 0, K: int = 8, fmt: str = "text") -> str:
    obj = build_operator(name, m, K)
    if not isinstance(obj, FFVO):
        if fmt == "json":
            f = obj.field
            return json.dumps({"kind": "series", "text": obj.to_str(),
                               "coeff": f.fmt(obj.coeff), "phase": obj.phase,
                               "zpow": str(obj.zpow), "wpow": str(obj.wpow),
                               "closed": [[str(e), n] for e, n in obj.closed],
                               "orientation": obj.orientation}, indent=2)
        return obj.to_str()
    d = obj.describe()
    if fmt == "json":
        return json.dumps({"kind": "ffvo", **d}, indent=2)
    lines = [f"operator {d['label'] or name}", f"prefactor {d['prefactor']}"]
    if d["phase"]:
        lines.append(f"phase zeta^{d['phase']}")
    lines.append(f"z^{d['zconst']}")
    for key in ("shift", "qgrade", "zlaw"):
        lines.append(f"{key} {' '.join(d[key])}")
    for key in ("creation", "annihilation"):
        for j, row in enumerate(d[key], 1):
            for k, a in enumerate(row, 1):
                if a != "0":
                    lines.append(f"{key} slot {j} k={k}: {a}")
    return "\n".join(lines)


# ---------------------------------------------------------------------------
# entry point
# ---------------------------------------------------------------------------

def _complex_q(re_part, im_part) -> complex:
    return complex(DEFAULT_Q.real if re_part is None else re_part,
                   DEFAULT_Q.imag if im_part is None else im_part)


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="qcurrents", description=__doc__)
    p.add_argument("--version", action="version", version=__version__)
    sub = p.add_subparsers(dest="command")

    r = sub.add_parser("run", help="run check suites")
    r.add_argument("--suite", default="all", choices=SUITES + ("all",))
    r.add_argument("--level-m", type=int, default=0, dest="m")
    r.add_argument("--sectors", default=None,
                   help="comma list; level one: sectors to test, else one label per slot")
    r.add_argument("--degree", type=int, default=3, dest="N")
    r.add_argument("--window", type=int, default=2, dest="W")
    r.add_argument("--kmax", type=int, default=None, dest="K")
    r.add_argument("--backend", default="exact", choices=BACKENDS)
    r.add_argument("--q-re", type=float, default=None)
    r.add_argument("--q-im", type=float, default=None)
    r.add_argument("--seed", type=int, default=0)
    r.add_argument("--report", default="text", choices=("json", "text"))
    r.add_argument("--out", default=None)
    r.add_argument("--cache-dir", default=None)
    r.add_argument("--delta-parse", default=DEFAULT_DELTA_PARSE, choices=DELTA_PARSES)
    r.add_argument("--coupling-denominator", default="k", choices=COUPLING_DENOMINATORS)
    r.add_argument("--indexing", default="reflected", choices=INDEXINGS)
    r.add_argument("--force", action="store_true")

    d = sub.add_parser("dump-operator", help="print an operator or contraction")
    d.add_argument("name", help=f"e.g. {', '.join(LABELS)}, V+, X-_2, phi+_1, contract(x+,x+)")
    d.add_argument("--level-m", type=int, default=0, dest="m")
    d.add_argument("--kmax", type=int, default=8, dest="K")
    d.add_argument("--format", default="text", choices=("json", "text"))
    return p


def config_from_args(a) -> RunConfig:
    if a.sectors is None:
        sectors = [0, 1] if a.m == 0 else [0] * (a.m + 1)
    else:
        try:
            sectors = [int(s) for s in a.sectors.split(",") if s.strip()]
        except ValueError:
            raise ConfigError(f"bad sector list {a.sectors!r}") from None
    return RunConfig(suite=a.suite, m=a.m, sectors=sectors, N=a.N, W=a.W, K=a.K,
                     backend=a.backend, q=_complex_q(a.q_re, a.q_im), seed=a.seed,
                     report=a.report, cache_dir=a.cache_dir or default_cache_dir(),
                     delta_parse=a.delta_parse, coupling_denominator=a.coupling_denominator,
                     indexing=a.indexing, force=a.force)


def main(argv=None) -> int:
    logging.basicConfig(level=logging.WARNING, format="%(levelname)s %(message)s")
    args = build_parser().parse_args(argv)
    if args.command is None:
        build_parser().print_help()
        return 2
    if args.command == "dump-operator":
        try:
            print(dump_operator(args.name, args.m, args.K, args.format))
        except UnknownOperator as exc:
            print(f"error: unknown operator {exc}", file=sys.stderr)
            return 2
        return 0
    try:
        cfg = config_from_args(args)
        doc = run(cfg)
    except ConfigError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    text = json.dumps(doc, indent=2) if cfg.report == "json" else render_text(doc)
    if args.out:
        with open(args.out, "w") as fh:
            fh.write(text + "\n")
    else:
        print(text)
    return 0 if doc["summary"]["passed"] else 1


if __name__ == "__main__":
    sys.exit(main())
