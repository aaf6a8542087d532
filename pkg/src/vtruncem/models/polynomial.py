"""
Polynomial model descriptions

A description is a list of assignments, one per line or separated by
``;``, with ``#`` comments:

    f = -x^3            # drift, d = 1 (``x`` is an alias of ``x1``)
    g = x               # diffusion, d = m = 1
    V = x^2

For d > 1 the drift components are ``f1 .. fd`` in the variables
``x1 .. xd`` and diffusion entries ``g<i>_<j>`` (row i, column j).
Right-hand sides are read by sympy: ``^`` and ``**`` both mean power,
parentheses group, juxtaposition multiplies (``3(x1 + 1)``) and decimals
are turned into exact rationals. Optional keys: ``w``, ``envelope`` (a
polynomial in ``u``), ``rho``, ``delta``, ``p``, ``c``, ``class``,
``variant``, ``theta``, ``K``, ``delta_star``, ``x0``, ``mu``,
``lambda``, ``box``, ``name``, ``dim``, ``noise_dim``.

Every polynomial is held as a ``sympy.Poly`` over QQ, so gradients and
hessians are derived exactly; floats appear only in the lambdified
callables.
"""

import logging
import re
from dataclasses import dataclass, field
from fractions import Fraction
from tokenize import TokenError
from typing import Callable, Dict, List, Optional, Sequence, Tuple

import numpy as np
import sympy as sp
from sympy.parsing.sympy_parser import (
    convert_xor,
    implicit_multiplication,
    parse_expr,
    rationalize,
    standard_transformations,
)

from ..core.sde import DecayFunction, LyapunovClass, LyapunovSpec, SdeSystem
from ..core.truncation import MonotoneEnvelope, PolicyVariant, TruncationPolicy
from ..core.validation import sample_box
from ..errors import ConfigError, DomainError
from .bundle import ModelBundle

logger = logging.getLogger(__name__)

Exponents = Tuple[int, ...]

TRANSFORMATIONS = standard_transformations + (implicit_multiplication, convert_xor, rationalize)

# names the parser may emit; anything else becomes a Symbol and is rejected
_PARSER_GLOBALS = {
    "Integer": sp.Integer,
    "Float": sp.Float,
    "Rational": sp.Rational,
    "Symbol": sp.Symbol,
    "Function": sp.Function,
}

_ENTRY = re.compile(r"^g(\d+)_(\d+)$")
_COMPONENT = re.compile(r"^f(\d+)$")
_COLUMN = re.compile(r"^g(\d+)$")

_PARAMETERS = {
    "rho", "delta", "p", "c", "class", "variant", "theta", "K", "delta_star",
    "x0", "mu", "lambda", "box", "name", "dim", "noise_dim",
}


@dataclass(frozen=True)
class Polynomial:
    """Multivariate polynomial with exact rational coefficients"""

    poly: sp.Poly
    _numeric: Callable = field(init=False, repr=False, compare=False)

    def __post_init__(self):
        object.__setattr__(self, "_numeric", sp.lambdify(self.poly.gens, self.poly.as_expr(), "numpy"))

    @classmethod
    def zero(cls, variables: Sequence[str]) -> "Polynomial":
        return cls(sp.Poly(0, *sp.symbols(list(variables)), domain="QQ"))

    @classmethod
    def parse(cls, text: str, variables: Sequence[str], aliases: Optional[Dict[str, str]] = None) -> "Polynomial":
        if not text.strip():
            raise ConfigError("empty polynomial")
        gens = sp.symbols(list(variables))
        names = dict(zip(variables, gens))
        names.update({alias: names[target] for alias, target in (aliases or {}).items()})
        try:
            expr = parse_expr(text, local_dict=names, global_dict=dict(_PARSER_GLOBALS), transformations=TRANSFORMATIONS)
        except (SyntaxError, TokenError, TypeError, NameError, ValueError, sp.SympifyError) as exc:
            raise ConfigError(f"cannot parse '{text.strip()}': {exc}") from None
        expr = sp.sympify(expr)
        unknown = sorted(str(s) for s in expr.free_symbols - set(gens))
        if unknown:
            raise ConfigError(f"unknown symbol {unknown[0]!r}; expected one of {', '.join(variables)}")
        if expr.has(sp.zoo, sp.oo, -sp.oo, sp.nan):
            raise ConfigError(f"division by zero in '{text.strip()}'")
        if not expr.is_polynomial(*gens):
            raise ConfigError(f"'{text.strip()}' is not a polynomial in {', '.join(variables)}")
        return cls(sp.Poly(expr, *gens, domain="QQ"))

    @property
    def nvars(self) -> int:
        return len(self.poly.gens)

    @property
    def terms(self) -> Tuple[Tuple[Exponents, sp.Rational], ...]:
        return tuple(sorted(self.poly.as_dict().items()))

    @property
    def is_zero(self) -> bool:
        return self.poly.is_zero

    @property
    def degree(self) -> int:
        return 0 if self.is_zero else int(self.poly.total_degree())

    def derivative(self, index: int) -> "Polynomial":
        return Polynomial(self.poly.diff(self.poly.gens[index]))

    def abs_majorant(self, u: float) -> float:
        """Σ|c|u^{|α|}, a bound for |p(x)| when every |x_i| ≤ u and u ≥ 1."""
        return sum(abs(float(coef)) * u ** sum(exps) for exps, coef in self.terms)

    def __call__(self, x: np.ndarray) -> np.ndarray:
        x = np.asarray(x, dtype=float)
        value = self._numeric(*np.moveaxis(x, -1, 0))
        return np.broadcast_to(np.asarray(value, dtype=float), x.shape[:-1]).copy()

    def __str__(self) -> str:
        return str(self.poly.as_expr())


def parse_assignments(text: str) -> Dict[str, str]:
    """Split a description into name → right-hand side."""
    out: Dict[str, str] = {}
    for line_no, line in enumerate(text.splitlines(), start=1):
        line = line.split("#", 1)[0]
        for statement in line.split(";"):
            if not statement.strip():
                continue
            if "=" not in statement:
                raise ConfigError(f"line {line_no}: expected 'name = value', got '{statement.strip()}'")
            name, value = (part.strip() for part in statement.split("=", 1))
            if not name:
                raise ConfigError(f"line {line_no}: missing name before '='")
            if name in out:
                raise ConfigError(f"line {line_no}: '{name}' assigned twice")
            out[name] = value
    return out


def _number(assignments: Dict[str, str], key: str, default: Optional[Fraction] = None) -> Optional[Fraction]:
    if key not in assignments:
        return default
    try:
        return Fraction(assignments[key])
    except (ValueError, ZeroDivisionError):
        raise ConfigError(f"'{key}' must be a number, got '{assignments[key]}'") from None


def _dimensions(assignments: Dict[str, str]) -> Tuple[int, int]:
    components = [int(m.group(1)) for m in map(_COMPONENT.match, assignments) if m]
    if "dim" in assignments:
        dim = int(_number(assignments, "dim"))
    elif "f" in assignments:
        dim = 1
    elif components:
        dim = max(components)
    else:
        raise ConfigError("no drift given (expected 'f' or 'f1'..'fd')")
    entries = [(int(m.group(1)), int(m.group(2))) for m in map(_ENTRY.match, assignments) if m]
    if "noise_dim" in assignments:
        noise = int(_number(assignments, "noise_dim"))
    elif entries:
        noise = max(j for _, j in entries)
    else:
        noise = 1
    if dim < 1 or noise < 1:
        raise ConfigError("dimensions must be positive")
    return dim, noise


def _collect_polynomials(assignments: Dict[str, str], dim: int, noise: int):
    variables = [f"x{i + 1}" for i in range(dim)]
    aliases = {"x": "x1"} if dim == 1 else {}
    drift: List[Polynomial] = [Polynomial.zero(variables)] * dim
    diffusion: Dict[Tuple[int, int], Polynomial] = {}
    other: Dict[str, Polynomial] = {}
    for name, text in assignments.items():
        if name in _PARAMETERS or name == "envelope":
            continue
        if name == "f" and dim == 1:
            drift[0] = Polynomial.parse(text, variables, aliases)
        elif _COMPONENT.match(name):
            i = int(name[1:])
            if not 1 <= i <= dim:
                raise ConfigError(f"drift component {name} outside 1..{dim}")
            drift[i - 1] = Polynomial.parse(text, variables, aliases)
        elif name == "g" and dim == 1 and noise == 1:
            diffusion[(0, 0)] = Polynomial.parse(text, variables, aliases)
        elif _ENTRY.match(name) or (_COLUMN.match(name) and noise == 1):
            match = _ENTRY.match(name)
            i, j = (int(match.group(1)), int(match.group(2))) if match else (int(name[1:]), 1)
            if not (1 <= i <= dim and 1 <= j <= noise):
                raise ConfigError(f"diffusion entry {name} outside {dim}x{noise}")
            diffusion[(i - 1, j - 1)] = Polynomial.parse(text, variables, aliases)
        elif name in ("V", "w"):
            other[name] = Polynomial.parse(text, variables, aliases)
        else:
            raise ConfigError(f"unknown key '{name}'")
    if "V" not in other:
        raise ConfigError("no Lyapunov function given (expected 'V = ...')")
    return drift, diffusion, other


def lyapunov_derivatives(v_poly: Polynomial) -> Tuple[List[Polynomial], List[List[Polynomial]]]:
    """Exact gradient and hessian of V as polynomials in the same variables."""
    gens = v_poly.poly.gens
    expr = v_poly.poly.as_expr()
    gradient = [Polynomial(sp.Poly(sp.diff(expr, s), *gens, domain="QQ")) for s in gens]
    hessian = sp.hessian(expr, gens)
    rows = [[Polynomial(sp.Poly(hessian[i, j], *gens, domain="QQ")) for j in range(len(gens))] for i in range(len(gens))]
    return gradient, rows


def _estimate_growth_constant(value, gradient, hessian, delta: float, kernel_power: bool, samples) -> float:
    worst = 0.0
    for x in samples:
        v = float(value(x))
        base = v if kernel_power else 1.0 + v
        for order, norm in ((1, np.linalg.norm(gradient(x))), (2, np.linalg.norm(hessian(x)))):
            exponent = 1.0 - order * delta
            scale = base**exponent if base > 0 else (1.0 if exponent == 0 else 0.0)
            if scale > 0:
                worst = max(worst, float(norm) / scale)
    return max(1.0, 1.01 * worst)


def _majorant_envelope(drift: List[Polynomial], diffusion: Dict[Tuple[int, int], Polynomial]) -> MonotoneEnvelope:
    def forward(u: float) -> float:
        f_bound = sum(p.abs_majorant(u) for p in drift)
        g_bound = sum(p.abs_majorant(u) ** 2 for p in diffusion.values())
        return 1.0 + u + max(f_bound, g_bound)

    return MonotoneEnvelope(forward, None, 1.0, "coefficient majorant 1 + u + max(Σ|f|, Σ|g|²)")


def build_polynomial_model(text: str) -> ModelBundle:
    """
    Build and validate a model bundle from a polynomial description

    Raises:
        ConfigError: the description does not parse or is incomplete
        ValidationError: a hypothesis check fails on the sample box
    """
    assignments = parse_assignments(text)
    dim, noise = _dimensions(assignments)
    drift, diffusion, polys = _collect_polynomials(assignments, dim, noise)
    v_poly = polys["V"]
    grad_polys, hess_polys = lyapunov_derivatives(v_poly)

    def drift_fn(x):
        return np.stack([p(x) for p in drift], axis=-1)

    def diffusion_fn(x):
        out = np.zeros(np.shape(x)[:-1] + (dim, noise))
        for (i, j), p in diffusion.items():
            out[..., i, j] = p(x)
        return out

    def gradient_fn(x):
        return np.stack([p(x) for p in grad_polys], axis=-1)

    def hessian_fn(x):
        return np.stack([np.stack([p(x) for p in row], axis=-1) for row in hess_polys], axis=-2)

    try:
        rho = float(_number(assignments, "rho", Fraction(1)))
        delta = float(_number(assignments, "delta", Fraction(1, 2)))
        order = int(_number(assignments, "p", Fraction(2)))
        class_flag = LyapunovClass.parse(assignments.get("class", "offset"))
        variant = PolicyVariant.parse(assignments.get("variant", "finite-time"))
    except DomainError as exc:
        raise ConfigError(str(exc)) from None
    theta = float(_number(assignments, "theta", Fraction(1, 4)))
    delta_star = float(_number(assignments, "delta_star", Fraction(1, 100)))
    lam = float(_number(assignments, "lambda", Fraction(1)))
    mu = _number(assignments, "mu")

    if "x0" in assignments:
        try:
            x0 = np.array([float(Fraction(c.strip())) for c in assignments["x0"].split(",")])
        except (ValueError, ZeroDivisionError):
            raise ConfigError(f"x0 must be a comma list of numbers, got '{assignments['x0']}'") from None
        if x0.shape[0] != dim:
            raise ConfigError(f"x0 has {x0.shape[0]} entries, expected {dim}")
    else:
        x0 = np.ones(dim)
    box = _number(assignments, "box")
    half = float(box) if box is not None else 2.0 * max(float(np.linalg.norm(x0)), 1.0)

    origin = np.zeros(dim)
    at_rest = all(p.poly.coeff_monomial(1) == 0 for p in drift) and all(
        p.poly.coeff_monomial(1) == 0 for p in diffusion.values()
    )
    kernel_power = class_flag is LyapunovClass.KERNEL_ZERO
    if "c" in assignments:
        growth = float(_number(assignments, "c"))
        estimated = False
    else:
        samples = sample_box([-half] * dim, [half] * dim, 128, [x0, origin])
        growth = _estimate_growth_constant(v_poly, gradient_fn, hessian_fn, delta, kernel_power, samples)
        estimated = True

    system = SdeSystem(dim, noise, drift_fn, diffusion_fn, equilibrium=origin if at_rest else None,
                       name=assignments.get("name", "polynomial"))
    try:
        spec = LyapunovSpec(v_poly, gradient_fn, hessian_fn, rho, delta, order, growth, class_flag)
    except DomainError as exc:
        raise ConfigError(str(exc)) from None

    decay = None
    if "w" in polys:
        decay = DecayFunction(polys["w"], kernel_is_origin=True, mu=None if mu is None else float(mu))
    elif variant.is_stability:
        raise ConfigError(f"the {variant.value} variant needs a decay function 'w = ...'")

    if "envelope" in assignments:
        env_poly = Polynomial.parse(assignments["envelope"], ["u"])
        envelope = MonotoneEnvelope(lambda u: float(env_poly(np.array([u]))), None, 1.0, assignments["envelope"])
    elif variant.is_stability:
        raise ConfigError(f"the {variant.value} variant needs an envelope 'envelope = ...'")
    else:
        envelope = _majorant_envelope(drift, diffusion)

    if "K" in assignments:
        policy = TruncationPolicy(variant, envelope, float(_number(assignments, "K")), theta, delta_star, order, x0)
    else:
        policy = TruncationPolicy.from_initial_state(variant, envelope, theta, delta_star, x0, order)

    provenance = {key: assignments[key] for key in assignments if key not in ("name",)}
    if estimated:
        provenance["c"] = f"{growth:.6g} (estimated on the sample box)"
    bundle = ModelBundle(
        name=assignments.get("name", "polynomial"),
        system=system,
        spec=spec,
        decay=decay,
        policy=policy,
        initial_state=x0,
        provenance=provenance,
        structure_lambda=lam,
        box_half_width=half,
        description="polynomial model",
    )
    logger.info("built polynomial model %s (d=%d, m=%d)", bundle.name, dim, noise)
    return bundle.validate()
