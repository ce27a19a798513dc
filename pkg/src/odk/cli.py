"""Command-line front end: density, certify, sample, verify.

Exit codes: 0 dense or ok, 1 not dense or failed verification, 2 unknown or
no certificate found, 3 for any error.
"""

from __future__ import annotations

import argparse
import json
import logging
import os
import sys
from dataclasses import asdict, dataclass
from pathlib import Path
from typing import Optional

import numpy as np

from odk import lattice_tools as lt
from odk.certifier import (
    DEFAULT_CERT_HEIGHT,
    certify_somewhere_dense,
    upgrade_to_dense,
    verify_certificate,
)
from odk.density import DEFAULT_HEIGHT, GeneratorFamily, decide_density
from odk.errors import OdkError, ParseError, ValidationError
from odk.matrix_group import DEFAULT_POOL_CAP, CommutingGroup
from odk.sampler import (
    DEFAULT_CAP,
    coverage_report,
    emit_plot_data,
    sample_orbit,
    sample_subgroup_windowed,
)

log = logging.getLogger("odk")

EXIT_OK = 0
EXIT_NEGATIVE = 1
EXIT_UNKNOWN = 2
EXIT_ERROR = 3


@dataclass(frozen=True)
class RunConfig:
    mode: Optional[str] = None
    height_bound: int = DEFAULT_HEIGHT
    residual_tol: float = lt.DEFAULT_RESIDUAL_TOL
    scale: float = lt.DEFAULT_SCALE
    shift_range: int = 1
    word_range: int = 1
    pool_cap: int = DEFAULT_POOL_CAP
    window: float = 1.0
    grid_step: float = 0.1
    box: int = 100
    cap: int = DEFAULT_CAP
    seed: int = 0
    out: Optional[str] = None
    csv: Optional[str] = None

    def __post_init__(self):
        for name in ("residual_tol", "scale", "window", "grid_step"):
            if not getattr(self, name) > 0:
                raise ValidationError(f"{name} must be positive")
        if self.height_bound < 1:
            raise ValidationError("height_bound must be >= 1")
        if self.mode not in (None, "exact", "float"):
            raise ValidationError(f"mode must be exact or float, got {self.mode!r}")

    @classmethod
    def from_args(cls, args: argparse.Namespace) -> "RunConfig":
        known = cls.__dataclass_fields__
        return cls(**{k: v for k, v in vars(args).items() if k in known and v is not None})


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(EXIT_ERROR, f"{self.prog}: error: {message}\n")


def _load_json(path: str) -> dict:
    try:
        text = Path(path).read_text()
    except OSError as exc:
        raise ParseError(f"cannot read {path}: {exc.strerror}") from exc
    try:
        return json.loads(text)
    except json.JSONDecodeError as exc:
        raise ParseError(f"{path}: line {exc.lineno} column {exc.colno}: {exc.msg}") from exc


def _emit(data: dict, out: Optional[str]) -> None:
    text = json.dumps(data, indent=2, sort_keys=True) + "\n"
    if out:
        Path(out).write_text(text)
    else:
        sys.stdout.write(text)


def parse_point(text: str) -> np.ndarray:
    try:
        return np.array([complex(tok.strip().replace(" ", "")) for tok in text.split(",")])
    except ValueError as exc:
        raise ParseError(f"cannot parse point {text!r}: expected comma-separated complex literals") from exc


def _is_group(data: dict) -> bool:
    return "n" in data and "ambient" not in data


# -- commands ------------------------------------------------------------------

def cmd_density(args) -> int:
    cfg = RunConfig.from_args(args)
    family = GeneratorFamily.from_json(_load_json(args.input))
    if cfg.mode == "float":
        family = family.to_float()
    elif cfg.mode == "exact" and family.mode != "exact":
        raise ValidationError("--mode exact needs a family with exact entries")
    kw = {}
    if family.mode == "float":
        kw = {"scale": cfg.scale, "residual_tol": cfg.residual_tol}
    verdict = decide_density(family, cfg.height_bound, **kw)
    _emit(verdict.to_json(), cfg.out)
    log.info("density: %s", verdict.outcome.value)
    return {"dense": EXIT_OK, "not_dense": EXIT_NEGATIVE}.get(verdict.classification, EXIT_UNKNOWN)


def cmd_certify(args) -> int:
    cfg = RunConfig.from_args(args)
    group = CommutingGroup.from_json(_load_json(args.input))
    x = parse_point(args.point)
    if x.shape[0] != group.n:
        raise ValidationError(f"point has {x.shape[0]} coordinates, group acts on C^{group.n}")
    if not np.any(x):
        raise ValidationError("the point must be nonzero")
    height = args.height if args.height is not None else DEFAULT_CERT_HEIGHT
    result = certify_somewhere_dense(group, x, cfg.shift_range, cfg.word_range, cfg.seed,
                                     height, cfg.pool_cap)
    if not result.found:
        _emit(result.to_json(), cfg.out)
        return EXIT_UNKNOWN
    cert = upgrade_to_dense(result, True)
    _emit(cert.to_json(), cfg.out)
    return EXIT_OK


def cmd_sample(args) -> int:
    cfg = RunConfig.from_args(args)
    data = _load_json(args.input)
    center = parse_point(args.center) if args.center else None
    annulus = tuple(float(v) for v in args.annulus.split(",")) if args.annulus else None
    if annulus is not None and len(annulus) != 2:
        raise ValidationError("--annulus takes r_in,r_out")
    if _is_group(data):
        group = CommutingGroup.from_json(data)
        if not args.point:
            raise ValidationError("orbit sampling needs --point")
        x = parse_point(args.point)
        if not np.any(x):
            raise ValidationError("the point must be nonzero")
        pts = sample_orbit(group, x, cfg.box, cfg.cap, cfg.seed)
        c = None if center is None else np.concatenate([center.real, center.imag])
    else:
        family = GeneratorFamily.from_json(data)
        c = None if center is None else center.real
        pts = sample_subgroup_windowed(family, cfg.box, cfg.window, c, cfg.cap, cfg.seed)
    report = coverage_report(pts, cfg.window, cfg.grid_step, center=c, annulus=annulus,
                             box_bound=cfg.box, cap=cfg.cap, seed=cfg.seed)
    if cfg.csv:
        emit_plot_data(pts, cfg.csv)
    _emit(report.to_json(), cfg.out)
    return EXIT_OK


def cmd_verify(args) -> int:
    report = verify_certificate(_load_json(args.input))
    _emit({"ok": report.ok, "problems": list(report.problems)}, args.out)
    return EXIT_OK if report.ok else EXIT_NEGATIVE


# -- entry point ---------------------------------------------------------------

def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="odk", description="Density of subgroups and orbits of abelian linear groups.")
    sub = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)

    def common(p):
        p.add_argument("--input", required=True, help="input JSON file")
        p.add_argument("--out", help="write JSON here instead of stdout")
        p.add_argument("--seed", type=int)

    p = sub.add_parser("density", help="decide density of a generator family")
    common(p)
    p.add_argument("--mode", choices=["exact", "float"])
    p.add_argument("--height", dest="height_bound", type=int)
    p.add_argument("--residual-tol", type=float)
    p.add_argument("--scale", type=float)
    p.set_defaults(func=cmd_density)

    p = sub.add_parser("certify", help="search for a dense-orbit certificate")
    common(p)
    p.add_argument("--point", required=True, help="comma-separated complex literals, e.g. 1,2+1j")
    p.add_argument("--height", type=int)
    p.add_argument("--shift-range", type=int)
    p.add_argument("--word-range", type=int)
    p.add_argument("--pool-cap", type=int)
    p.set_defaults(func=cmd_certify)

    p = sub.add_parser("sample", help="sample a subgroup or orbit and report coverage")
    common(p)
    p.add_argument("--point")
    p.add_argument("--window", type=float)
    p.add_argument("--grid", dest="grid_step", type=float)
    p.add_argument("--box", type=int)
    p.add_argument("--cap", type=int)
    p.add_argument("--center")
    p.add_argument("--annulus", help="r_in,r_out")
    p.add_argument("--csv")
    p.set_defaults(func=cmd_sample)

    p = sub.add_parser("verify", help="re-check a certificate")
    p.add_argument("--input", required=True)
    p.add_argument("--out")
    p.set_defaults(func=cmd_verify)
    return parser


def main(argv=None) -> int:
    level = os.environ.get("ODK_LOG", "WARNING").upper()
    logging.basicConfig(level=getattr(logging, level, logging.WARNING), format="%(levelname)s %(name)s: %(message)s")
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except OdkError as exc:
        print(f"error [{exc.code}]: {exc}", file=sys.stderr)
        return EXIT_ERROR


if __name__ == "__main__":
    sys.exit(main())
