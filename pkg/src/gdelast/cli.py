"""Command-line interface: ``gdelast {solve,indicators,study,check-law} CONFIG``.

The config is INI-like: ``key = value`` lines under ``[mesh] [backend] [law]
[case] [solve] [study]``; a ``seed`` line may appear before any section.
"""

from __future__ import annotations

import argparse
import configparser
import sys
import warnings
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from . import study as st
from .discretizations import BACKENDS, KornWarning
from .gd import DiscretisationError, EigenConvergenceError, KornKernelError, coercivity_C, gram_set, korn_K
from .laws import DamageLaw, HenckyVonMises, LinearLaw, broken_damage_law, check_hypotheses
from .solver import SolverError, dual_norm
from .assembly import assemble_residual, assemble_rhs
from .tensor import IsoTensor4

LAW_KINDS = ("linear", "hvm", "damage", "damage-broken")
SECTIONS = ("global", "mesh", "backend", "law", "case", "solve", "study")


class ConfigError(ValueError):
    pass


@dataclass
class Config:
    seed: int
    n: int
    kind: str | None
    backend: str
    space: str
    theta: float | None
    override_korn: bool
    law_kind: str | None
    lam: float
    mu: float
    mu_inf: float | None
    D_lambda: float
    D_mu: float | None
    samples: int
    case: str
    tensor: str | None
    tol: float
    maxit: int
    omega: float
    study_kind: str
    n_list: list
    lambda_list: list
    backends: list

    def backend_opts(self) -> dict:
        opts = {"D_lambda": self.D_lambda, "D_mu": self.D_mu, "theta": self.theta}
        if self.backend == "huw":
            opts["space"] = self.space
        if self.backend == "cr":
            opts["require_full_dirichlet"] = not self.override_korn
        return opts

    def law(self):
        C = IsoTensor4.from_lame(self.lam, self.mu)
        kind = self.law_kind
        if kind is None:
            return None
        if kind == "linear":
            return LinearLaw(C)
        if kind == "hvm":
            return HenckyVonMises.default(self.lam, self.mu, 0.5 * self.mu if self.mu_inf is None else self.mu_inf)
        if kind == "damage":
            return DamageLaw.default(C)
        return broken_damage_law(C)

    def make_case(self):
        return st.builtin_case(self.case, lam=self.lam, mu=self.mu, law=self.law())


def _list(text, conv, what):
    items = [t for t in text.replace(",", " ").split() if t]
    try:
        return [conv(t) for t in items]
    except ValueError:
        raise ConfigError(f"{what}: cannot parse {text!r}") from None


def load_config(path) -> Config:
    try:
        text = Path(path).read_text()
    except OSError as exc:
        raise ConfigError(f"cannot read config: {exc}") from None
    parser = configparser.ConfigParser(inline_comment_prefixes=("#", ";"))
    try:
        parser.read_string("[global]\n" + text)
    except configparser.Error as exc:
        raise ConfigError(f"config parse error: {exc}".replace("\n", " ")) from None
    for sec in parser.sections():
        if sec not in SECTIONS:
            raise ConfigError(f"unknown section [{sec}]")

    def get(sec, key, conv=str, default=None):
        if not parser.has_option(sec, key):
            return default
        raw = parser.get(sec, key).strip()
        try:
            return conv(raw)
        except ValueError:
            raise ConfigError(f"{sec}.{key}: cannot parse {raw!r}") from None

    def flag(sec, key):
        try:
            return parser.getboolean(sec, key, fallback=False)
        except ValueError:
            raise ConfigError(f"{sec}.{key}: expected a boolean") from None

    backend = get("backend", "name", str, "p1").lower()
    if backend not in BACKENDS:
        raise ConfigError(f"unknown backend {backend!r}; expected one of {', '.join(BACKENDS)}")
    kind = get("mesh", "kind", str)
    if kind is not None and kind not in ("tri", "quad"):
        raise ConfigError(f"mesh.kind must be tri or quad, got {kind!r}")
    law_kind = get("law", "kind", str)
    if law_kind is not None and law_kind not in LAW_KINDS:
        raise ConfigError(f"unknown law kind {law_kind!r}; expected one of {', '.join(LAW_KINDS)}")
    case = get("case", "name", str, "lin-smooth-dirichlet")
    if case not in st.CASES:
        raise ConfigError(f"unknown case {case!r}; expected one of {', '.join(st.CASES)}")
    tensor = get("case", "tensor", str)
    if tensor is not None and tensor not in st.TENSORS:
        raise ConfigError(f"unknown tensor {tensor!r}; expected one of {', '.join(st.TENSORS)}")
    space = get("backend", "space", str, "S1").upper()
    if space not in ("S1", "S2", "S3"):
        raise ConfigError(f"backend.space must be S1, S2 or S3, got {space!r}")
    n = get("mesh", "n", int, 8)
    if n < 1:
        raise ConfigError("mesh.n must be >= 1")
    n_list = _list(get("study", "n_list", str, ""), int, "study.n_list") if parser.has_option("study", "n_list") else None
    if n_list is not None and (not n_list or min(n_list) < 1):
        raise ConfigError("study.n_list must be a non-empty list of positive integers")
    lambda_list = _list(get("study", "lambda_list", str, "1 1e3 1e6"), float, "study.lambda_list")
    backends = _list(get("study", "backends", str, "q1 nodal huw:S1 huw:S2 huw:S3"), str, "study.backends")
    for b in backends:
        if b.partition(":")[0] not in BACKENDS:
            raise ConfigError(f"unknown backend {b!r} in study.backends")
    study_kind = get("study", "kind", str, "convergence")
    if study_kind not in ("convergence", "locking"):
        raise ConfigError(f"study.kind must be convergence or locking, got {study_kind!r}")
    return Config(
        seed=get("global", "seed", int, 0),
        n=n,
        kind=kind,
        backend=backend,
        space=space,
        theta=get("backend", "theta", float),
        override_korn=flag("backend", "override_korn"),
        law_kind=law_kind,
        lam=get("law", "lambda", float, 1.0),
        mu=get("law", "mu", float, 1.0),
        mu_inf=get("law", "mu_inf", float),
        D_lambda=get("law", "D_lambda", float, 0.0),
        D_mu=get("law", "D_mu", float),
        samples=get("law", "samples", int, 10_000),
        case=case,
        tensor=tensor,
        tol=get("solve", "tol", float, 1e-10),
        maxit=get("solve", "maxit", int, 50),
        omega=get("solve", "omega", float, 1.0),
        study_kind=study_kind,
        n_list=n_list,
        lambda_list=lambda_list,
        backends=backends,
    )


def _backend_label(cfg: Config) -> str:
    return f"huw:{cfg.space}" if cfg.backend == "huw" else cfg.backend


def _num(v) -> str:
    return "%.12e" % v


def cmd_solve(cfg: Config, out: Path) -> int:
    case = cfg.make_case()
    opts = cfg.backend_opts()
    opts.pop("space", None)
    _, gd = st.build_backend(_backend_label(cfg), cfg.n, case, cfg.kind, **opts)
    grams = gram_set(gd)
    u, res = st.solve_case(gd, case, cfg.tol, cfg.maxit, cfg.omega, grams)
    b = assemble_rhs(gd, case.F, case.g)
    residual = dual_norm(grams, assemble_residual(gd, case.law, u, b))
    errH1, errL2 = st.error_norms(gd, u, case)
    normD = float(np.sqrt(max(u @ (grams.G @ u), 0.0))) if gd.ndof else 0.0
    C = coercivity_C(gd, grams, cfg.seed)
    K = korn_K(gd, grams, cfg.seed)

    labels = gd.dof_labels if gd.dof_labels is not None else np.zeros((0, 2), dtype=int)
    with open(out / "solution.csv", "w") as fh:
        fh.write(f"dof,{gd.params.get('entity', 'entity')},component,value\n")
        for i, (ent, comp) in enumerate(labels):
            fh.write(f"{i},{ent},{comp},{_num(u[i])}\n")
    pu, gu = gd.evaluate(u) if gd.ndof else (np.zeros((gd.nq, 2)), np.zeros((gd.nq, 2, 2)))
    with open(out / "fields.csv", "w") as fh:
        fh.write("x,y,weight,u1,u2,g11,g12,g21,g22\n")
        for x, w, p, g in zip(gd.points, gd.weights, pu, gu.reshape(-1, 4)):
            fh.write(",".join(_num(v) for v in (*x, w, *p, *g)) + "\n")
    summary = [
        ("backend", _backend_label(cfg)),
        ("case", case.name),
        ("n", str(cfg.n)),
        ("dofs", str(gd.ndof)),
        ("iterations", str(1 if res is None else res.iterations)),
        ("residual", _num(residual)),
        ("norm_D", _num(normD)),
        ("C_D", _num(C)),
        ("K_D", _num(K)),
        ("errH1", _num(errH1)),
        ("errL2", _num(errL2)),
    ]
    text = "".join(f"{k} = {v}\n" for k, v in summary)
    (out / "summary.txt").write_text(text)
    sys.stdout.write(text)
    return 0


def _n_list(cfg: Config):
    if cfg.n_list is None:
        return [cfg.n]
    return cfg.n_list


def cmd_indicators(cfg: Config, out: Path) -> int:
    case = cfg.make_case()
    opts = cfg.backend_opts()
    opts.pop("space", None)
    rows = [
        st.indicator_row(_backend_label(cfg), n, case, cfg.seed, cfg.kind, cfg.tensor, **opts) for n in sorted(_n_list(cfg))
    ]
    text = st.rows_to_csv(rows)
    (out / "indicators.csv").write_text(text)
    sys.stdout.write(text)
    return 0


def cmd_study(cfg: Config, out: Path) -> int:
    if cfg.study_kind == "locking":
        rows = st.locking_experiment(cfg.backends, cfg.lambda_list, n=cfg.n, mu=cfg.mu)
        text = st.rows_to_csv(st.locking_as_rows(rows))
        (out / "locking.csv").write_text(text)
        st.plot_locking(rows, out / "locking.svg")
        sys.stdout.write(text)
        for name, s in st.locking_summary(rows).items():
            sys.stdout.write(f"# {name}: spread = {s['spread']:.4f}, growth = {s['growth']:.4f}\n")
        return 0
    case = cfg.make_case()
    opts = cfg.backend_opts()
    opts.pop("space", None)
    rows = st.convergence_study(
        _backend_label(cfg), case, _n_list(cfg), cfg.seed, cfg.kind, tol=cfg.tol, maxit=cfg.maxit,
        omega=cfg.omega, **opts
    )
    text = st.rows_to_csv(rows)
    (out / "study.csv").write_text(text)
    st.plot_convergence(rows, out / "study.svg")
    sys.stdout.write(text)
    return 0


def cmd_check_law(cfg: Config, out: Path) -> int:
    kind = cfg.law_kind or "hvm"
    law = cfg.law() if cfg.law_kind else HenckyVonMises.default(cfg.lam, cfg.mu, 0.5 * cfg.mu)
    report = check_hypotheses(law, samples=cfg.samples, seed=cfg.seed)
    text = f"law = {kind}\n" + "".join(line + "\n" for line in report.lines())
    text += f"verdict = {'pass' if report.ok else 'fail'}\n"
    (out / "check_law.txt").write_text(text)
    sys.stdout.write(text)
    return 0 if report.ok else 3


COMMANDS = {"solve": cmd_solve, "indicators": cmd_indicators, "study": cmd_study, "check-law": cmd_check_law}


def main(argv=None) -> int:
    ap = argparse.ArgumentParser(prog="gdelast", description=__doc__.splitlines()[0])
    ap.add_argument("command", choices=sorted(COMMANDS))
    ap.add_argument("config", help="path to the config file")
    ap.add_argument("--out", default=".", help="output directory (created if missing)")
    args = ap.parse_args(argv)
    try:
        cfg = load_config(args.config)
        if args.command == "study" and cfg.study_kind == "convergence" and cfg.n_list is None:
            raise ConfigError("study needs study.n_list")
    except ConfigError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    with warnings.catch_warnings(record=True) as caught:
        warnings.simplefilter("always", KornWarning)
        try:
            code = COMMANDS[args.command](cfg, out)
        except (DiscretisationError, ValueError) as exc:
            code = _fail(exc, caught, 2 if isinstance(exc, KornKernelError) else 1)
        except (SolverError, EigenConvergenceError) as exc:
            code = _fail(exc, caught, 2)
        else:
            _report(caught)
    return code


def _report(caught):
    for w in caught:
        print(f"warning: {w.message}", file=sys.stderr)


def _fail(exc, caught, code):
    _report(caught)
    print(f"error: {exc}", file=sys.stderr)
    return code


if __name__ == "__main__":
    sys.exit(main())
