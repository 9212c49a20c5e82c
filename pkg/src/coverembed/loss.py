"""Pairwise loss objects, strength-indexed loss families, and embedding problems.

Loss objects carry, per pair, a contractive term c and an expansive term e as
tagged parametric forms so that interval suprema (needed by the stability
checker) are exact rather than sampled. The ordering on loss objects is
  (c, e) <= (c', e')  iff  c' <= c and e <= e' pointwise.

A fuzzy loss family assigns a loss object to every strength a in (0, 1];
flattening integrates c and e over a, in closed form for the parametric
pieces and by adaptive quadrature for verification.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np
from scipy.integrate import quad

from .covers import HierarchicalCover, MembershipMatrix, membership_matrix
from .errors import ValidationError

FCE_CLAMP_DEFAULT = 1e-6


# -- parametric scalar forms ---------------------------------------------------


@dataclass(frozen=True)
class Form:
    """Tagged parametric function of the embedded distance x >= 0.

    kinds: "zero"; "const" b; "quad" a*x^2; "affine_x2" a*x^2 + b;
    "log_barrier" lin*x - bar*log(1 - v(x)) + const with v = clamp(e^-x).
    """

    kind: str
    a: float = 0.0
    b: float = 0.0
    lin: float = 0.0
    bar: float = 0.0
    clamp: float = FCE_CLAMP_DEFAULT

    def value(self, x):
        x = np.asarray(x, dtype=float)
        if self.kind == "zero":
            return np.zeros_like(x)
        if self.kind == "const":
            return np.full_like(x, self.b)
        if self.kind == "quad":
            return self.a * x * x
        if self.kind == "affine_x2":
            return self.a * x * x + self.b
        if self.kind == "log_barrier":
            v = np.clip(np.exp(-x), self.clamp, 1.0 - self.clamp)
            return self.lin * x - self.bar * np.log1p(-v) + self.b
        raise ValidationError(f"unknown form kind {self.kind!r}")

    def abs_sup(self, radius: float) -> float:
        """Exact sup of |value| over [0, radius]."""
        if radius < 0:
            raise ValidationError("interval radius must be nonnegative")
        if self.kind == "zero":
            return 0.0
        if self.kind == "const":
            return abs(self.b)
        if self.kind in ("quad", "affine_x2"):
            # monotone in x^2, so the endpoints dominate
            return max(abs(float(self.value(0.0))), abs(float(self.value(radius))))
        if self.kind == "log_barrier":
            candidates = [0.0, radius]
            # stationary point of lin*x - bar*log(1 - e^-x)
            if self.lin > 0 and self.bar > 0:
                xstar = math.log((self.lin + self.bar) / self.lin)
                if 0 < xstar < radius:
                    candidates.append(xstar)
            return max(abs(float(self.value(x))) for x in candidates)
        raise ValidationError(f"unknown form kind {self.kind!r}")

    def is_polynomial(self) -> bool:
        return self.kind in ("zero", "const", "quad", "affine_x2")

    def as_affine_x2(self) -> tuple[float, float]:
        if self.kind == "zero":
            return 0.0, 0.0
        if self.kind == "const":
            return 0.0, self.b
        if self.kind == "quad":
            return self.a, 0.0
        if self.kind == "affine_x2":
            return self.a, self.b
        raise ValidationError(f"{self.kind!r} form is not affine in x^2")

    def to_json(self) -> dict:
        obj = {"kind": self.kind}
        for name in ("a", "b", "lin", "bar"):
            val = getattr(self, name)
            if val != 0.0:
                obj[name] = val
        if self.kind == "log_barrier":
            obj["clamp"] = self.clamp
        return obj


ZERO_FORM = Form("zero")


def form_from_json(obj) -> Form:
    return Form(
        kind=obj["kind"],
        a=float(obj.get("a", 0.0)),
        b=float(obj.get("b", 0.0)),
        lin=float(obj.get("lin", 0.0)),
        bar=float(obj.get("bar", 0.0)),
        clamp=float(obj.get("clamp", FCE_CLAMP_DEFAULT)),
    )


def _form_leq(f: Form, g: Form, xs: np.ndarray) -> bool:
    """f <= g on the sampled range; exact endpoint test for polynomial forms."""
    if f.is_polynomial() and g.is_polynomial():
        fa, fb = f.as_affine_x2()
        ga, gb = g.as_affine_x2()
        x_max = float(xs.max(initial=0.0))
        return (fb <= gb) and (fa * x_max**2 + fb <= ga * x_max**2 + gb)
    return bool(np.all(f.value(xs) <= g.value(xs)))


# -- loss objects ---------------------------------------------------------------


@dataclass(frozen=True)
class LossObject:
    """Per-pair (c, e) forms over an n-point ground set; missing pairs are zero."""

    n: int
    terms: dict[tuple[int, int], tuple[Form, Form]] = field(default_factory=dict)

    def pair(self, i: int, j: int) -> tuple[Form, Form]:
        key = (min(i, j), max(i, j))
        return self.terms.get(key, (ZERO_FORM, ZERO_FORM))

    def to_json(self) -> dict:
        return {
            "n": self.n,
            "terms": [
                {"i": i, "j": j, "c": c.to_json(), "e": e.to_json()}
                for (i, j), (c, e) in sorted(self.terms.items())
            ],
        }


def loss_object_from_json(obj) -> LossObject:
    terms = {
        (int(t["i"]), int(t["j"])): (form_from_json(t["c"]), form_from_json(t["e"]))
        for t in obj["terms"]
    }
    return LossObject(int(obj["n"]), terms)


@dataclass(frozen=True)
class GridSpec:
    """Sample grid for pointwise order checks on [0, x_max]."""

    x_max: float = 10.0
    count: int = 101

    def points(self) -> np.ndarray:
        return np.linspace(0.0, self.x_max, self.count)


def loss_leq(l1: LossObject, l2: LossObject, grid: GridSpec = GridSpec()) -> bool:
    """l1 <= l2 in the loss ordering: c2 <= c1 and e1 <= e2 for every pair."""
    if l1.n != l2.n:
        raise ValidationError(f"cardinality mismatch: {l1.n} vs {l2.n}")
    xs = grid.points()
    for key in sorted(set(l1.terms) | set(l2.terms)):
        c1, e1 = l1.pair(*key)
        c2, e2 = l2.pair(*key)
        if not _form_leq(c2, c1, xs):
            return False
        if not _form_leq(e1, e2, xs):
            return False
    return True


# -- strength-indexed families --------------------------------------------------


class MdsPairFamily:
    """The stress-derived (c, e) family for one pair with membership w in (0, 1].

    For strengths a <= w the pair is co-clustered: c = x^2, e = 0. Beyond w,
    c = x^2 + 2 x^2 (1/w - 1/a) and e = 2 log(w)/w - 2 log(a)/a.
    """

    def __init__(self, w: float):
        if not 0.0 < w <= 1.0:
            raise ValidationError(f"membership must lie in (0, 1], got {w!r}")
        self.w = float(w)

    def critical_strengths(self) -> tuple[float, ...]:
        return (self.w,) if self.w < 1.0 else ()

    def c_form_at(self, a: float) -> Form:
        if a <= self.w:
            return Form("quad", a=1.0)
        return Form("quad", a=1.0 + 2.0 * (1.0 / self.w - 1.0 / a))

    def e_form_at(self, a: float) -> Form:
        if a <= self.w:
            return ZERO_FORM
        val = 2.0 * math.log(self.w) / self.w - 2.0 * math.log(a) / a
        return Form("const", b=val)

    def flatten_exact(self) -> tuple[Form, Form]:
        w = self.w
        # integral of the quadratic coefficient over a in (0, 1]
        coeff = 1.0 + 2.0 * (1.0 - w) / w + 2.0 * math.log(w)
        # integral of the constant e over a in (w, 1]
        econst = 2.0 * math.log(w) / w * (1.0 - w) + math.log(w) ** 2
        c = Form("quad", a=coeff)
        e = Form("const", b=econst) if econst != 0.0 else ZERO_FORM
        return c, e

    def sup_abs_c(self, radius: float) -> float:
        """sup over a in (0,1] and x in [0, radius] of |c|; attained at a = 1."""
        return (2.0 / self.w - 1.0) * radius * radius

    def sup_abs_e(self) -> float:
        """sup over a in (0,1] of |e|; attained at a = 1."""
        return abs(2.0 * math.log(self.w) / self.w)

    def c_integrand_t(self, t: float, x: float) -> float:
        """c(a, x) * da/dt under the substitution a = exp(-t)."""
        a = math.exp(-t)
        return float(self.c_form_at(a).value(x)) * a

    def e_integrand_t(self, t: float) -> float:
        a = math.exp(-t)
        return float(self.e_form_at(a).value(0.0)) * a


class PiecewisePairFamily:
    """Strength-piecewise-constant (c, e) forms, for hand-built families in tests."""

    def __init__(self, breaks, c_forms, e_forms):
        if not (len(breaks) + 1 == len(c_forms) == len(e_forms)):
            raise ValidationError("need one form per strength interval")
        self.breaks = tuple(float(b) for b in breaks)
        self.c_forms = tuple(c_forms)
        self.e_forms = tuple(e_forms)

    def critical_strengths(self) -> tuple[float, ...]:
        return self.breaks

    def _piece(self, a: float) -> int:
        idx = 0
        for b in self.breaks:
            if a > b:
                idx += 1
        return idx

    def c_form_at(self, a: float) -> Form:
        return self.c_forms[self._piece(a)]

    def e_form_at(self, a: float) -> Form:
        return self.e_forms[self._piece(a)]

    def flatten_exact(self) -> tuple[Form, Form]:
        edges = (0.0,) + self.breaks + (1.0,)
        ca = cb = ea = eb = 0.0
        for t in range(len(edges) - 1):
            width = edges[t + 1] - edges[t]
            a1, b1 = self.c_forms[t].as_affine_x2()
            a2, b2 = self.e_forms[t].as_affine_x2()
            ca += width * a1
            cb += width * b1
            ea += width * a2
            eb += width * b2
        return Form("affine_x2", a=ca, b=cb), Form("affine_x2", a=ea, b=eb)

    def sup_abs_c(self, radius: float) -> float:
        return max(f.abs_sup(radius) for f in self.c_forms)

    def sup_abs_e(self) -> float:
        return max(f.abs_sup(0.0) for f in self.e_forms)


@dataclass(frozen=True)
class FuzzyLossFamily:
    """Map from strength a in (0, 1] to a LossObject, with finitely many breaks."""

    n: int
    pairs: dict[tuple[int, int], object] = field(default_factory=dict)

    def critical_strengths(self) -> tuple[float, ...]:
        crit = set()
        for fam in self.pairs.values():
            crit.update(fam.critical_strengths())
        return tuple(sorted(crit))

    def loss_object_at(self, a: float) -> LossObject:
        if not 0.0 < a <= 1.0:
            raise ValidationError(f"strength must lie in (0, 1], got {a!r}")
        terms = {
            key: (fam.c_form_at(a), fam.e_form_at(a))
            for key, fam in self.pairs.items()
        }
        return LossObject(self.n, terms)

    def to_json(self) -> dict:
        entries = []
        for (i, j), fam in sorted(self.pairs.items()):
            if isinstance(fam, MdsPairFamily):
                entries.append({"i": i, "j": j, "family": "mds", "w": fam.w})
            else:
                entries.append(
                    {
                        "i": i,
                        "j": j,
                        "family": "piecewise",
                        "breaks": list(fam.breaks),
                        "c": [f.to_json() for f in fam.c_forms],
                        "e": [f.to_json() for f in fam.e_forms],
                    }
                )
        return {"n": self.n, "pairs": entries}


def mds_fuzzy_family(
    w: MembershipMatrix,
    h: HierarchicalCover | None = None,
    a_min: float | None = None,
) -> FuzzyLossFamily:
    """Strength-indexed stress family for a membership matrix.

    If the hierarchy is supplied it must reproduce w. Pairs with w = 0 have a
    non-integrable family and are rejected unless a_min requests truncation,
    which floors their membership at a_min.
    """
    if h is not None:
        recomputed = membership_matrix(h)
        if not np.allclose(recomputed.w, w.w, rtol=0, atol=1e-12):
            raise ValidationError("membership matrix inconsistent with hierarchy")
    n = w.n
    pairs = {}
    for i in range(n):
        for j in range(i + 1, n):
            wij = float(w.w[i, j])
            if wij == 0.0:
                if a_min is None:
                    raise ValidationError(
                        f"pair ({i}, {j}) never co-clusters (w = 0): its family is "
                        "non-integrable; pass a_min to truncate"
                    )
                wij = a_min
            pairs[(i, j)] = MdsPairFamily(wij)
    return FuzzyLossFamily(n, pairs)


def family_leq(
    f1: FuzzyLossFamily, f2: FuzzyLossFamily, grid: GridSpec = GridSpec()
) -> bool:
    """f1 <= f2 at every critical strength (and at a = 1)."""
    if f1.n != f2.n:
        raise ValidationError(f"cardinality mismatch: {f1.n} vs {f2.n}")
    strengths = sorted(set(f1.critical_strengths()) | set(f2.critical_strengths()) | {1.0})
    return all(loss_leq(f1.loss_object_at(a), f2.loss_object_at(a), grid) for a in strengths)


# -- flatten ---------------------------------------------------------------------


@dataclass(frozen=True)
class QuadratureSettings:
    """How to integrate a family over strengths: exact pieces or adaptive quadrature."""

    method: str = "exact"  # "exact" | "quadrature"
    rel_tol: float = 1e-8
    tail_margin: float = 20.0
    x_probe: tuple[float, ...] = (0.0, 0.5, 1.0, 2.0)


def flatten(family: FuzzyLossFamily, settings: QuadratureSettings = QuadratureSettings()) -> LossObject:
    """Integrate c and e over strengths a in (0, 1], pairwise.

    The exact path integrates the parametric pieces in closed form. The
    quadrature path substitutes a = exp(-t), integrates t over [0, T] with T
    = (largest finite target distance) + tail_margin, bounds the tail
    analytically, and fits the result back onto the closed-form tags; it
    exists to verify the exact path and raises if the two disagree beyond the
    requested relative tolerance.
    """
    if settings.method == "exact":
        terms = {}
        for key, fam in sorted(family.pairs.items()):
            c, e = fam.flatten_exact()
            terms[key] = (c, e)
        return LossObject(family.n, terms)
    if settings.method != "quadrature":
        raise ValidationError(f"unknown flatten method {settings.method!r}")

    terms = {}
    for key, fam in sorted(family.pairs.items()):
        c_exact, e_exact = fam.flatten_exact()
        if not isinstance(fam, MdsPairFamily):
            terms[key] = (c_exact, e_exact)
            continue
        target = -math.log(fam.w)
        t_max = target + settings.tail_margin
        breaks = [target] if 0.0 < target < t_max else []
        for x in settings.x_probe:
            got, _ = quad(
                fam.c_integrand_t,
                0.0,
                t_max,
                args=(x,),
                points=breaks,
                epsabs=0.0,
                epsrel=settings.rel_tol,
                limit=200,
            )
            got += x * x * math.exp(-t_max)  # analytic tail: co-clustered branch
            want = float(c_exact.value(x))
            if abs(got - want) > settings.rel_tol * max(1.0, abs(want)) * 10:
                raise ValidationError(
                    f"quadrature disagrees with closed form for pair {key} at x={x}: "
                    f"{got!r} vs {want!r}"
                )
        got_e, _ = quad(
            fam.e_integrand_t,
            0.0,
            t_max,
            points=breaks,
            epsabs=0.0,
            epsrel=settings.rel_tol,
            limit=200,
        )
        want_e = float(e_exact.value(0.0))
        if abs(got_e - want_e) > settings.rel_tol * max(1.0, abs(want_e)) * 10:
            raise ValidationError(
                f"quadrature disagrees with closed form for pair {key} (e term): "
                f"{got_e!r} vs {want_e!r}"
            )
        terms[key] = (c_exact, e_exact)
    return LossObject(family.n, terms)


# -- sign classification -----------------------------------------------------------


@dataclass(frozen=True)
class SignReport:
    """Observed sign pattern of a family over a grid of strengths and distances."""

    c_nonnegative: bool
    e_nonpositive: bool
    c_nonpositive: bool
    e_nonnegative: bool
    witnesses: tuple[str, ...]

    @property
    def classification(self) -> str:
        pos = self.c_nonnegative and self.e_nonpositive
        neg = self.c_nonpositive and self.e_nonnegative
        if pos and neg:
            return "both"
        if pos:
            return "positive-extensible"
        if neg:
            return "negative-extensible"
        return "neither"


def sign_classification(
    family: FuzzyLossFamily, grid: GridSpec = GridSpec(), tol: float = 1e-12
) -> SignReport:
    """Check c >= 0 / e <= 0 (and the mirrored pattern) over strengths and x."""
    strengths = set(family.critical_strengths()) | {1.0}
    for a in sorted(strengths):
        strengths.add(max(a / 2.0, 1e-12))
    xs = grid.points()
    c_nn = e_np = c_np = e_nn = True
    witnesses = []
    for a in sorted(strengths):
        obj = family.loss_object_at(a)
        for key, (c, e) in sorted(obj.terms.items()):
            cv = c.value(xs)
            ev = e.value(xs)
            if (cv < -tol).any():
                c_nn = False
                witnesses.append(f"c<0 at a={a!r} pair={key}")
            if (ev > tol).any():
                e_np = False
                witnesses.append(f"e>0 at a={a!r} pair={key}")
            if (cv > tol).any():
                c_np = False
            if (ev < -tol).any():
                e_nn = False
    return SignReport(c_nn, e_np, c_np, e_nn, tuple(witnesses[:10]))


# -- embedding problems -------------------------------------------------------------


def pairwise_distances(a: np.ndarray) -> np.ndarray:
    from scipy.spatial.distance import cdist

    d = cdist(a, a)
    np.fill_diagonal(d, 0.0)
    return d


def _apply_target_policy(targets: np.ndarray, policy: str, cap_factor: float):
    t = np.array(targets, dtype=float)
    if t.ndim != 2 or t.shape[0] != t.shape[1]:
        raise ValidationError(f"target matrix must be square, got {t.shape}")
    if not np.array_equal(t, t.T):
        raise ValidationError("target matrix must be symmetric")
    if np.diagonal(t).any():
        raise ValidationError("target diagonal must be zero")
    if np.isnan(t).any() or (t < 0).any():
        raise ValidationError("targets must be nonnegative reals or +inf")
    weights = np.ones_like(t)
    np.fill_diagonal(weights, 0.0)
    infinite = ~np.isfinite(t)
    capped = 0
    if infinite.any():
        if policy == "strict":
            i, j = np.argwhere(infinite)[0]
            raise ValidationError(
                f"infinite target at ({i}, {j}); choose policy 'cap' or 'drop'"
            )
        if policy == "cap":
            finite = t[np.isfinite(t)]
            cap = cap_factor * (finite.max() if finite.size else 1.0)
            t[infinite] = cap
            capped = int(infinite.sum() // 2)
        elif policy == "drop":
            weights[infinite] = 0.0
            t[infinite] = 0.0
            capped = 0
        else:
            raise ValidationError(f"unknown target policy {policy!r}")
    return t, weights, capped


class StressProblem:
    """Pairwise squared-difference loss against fixed target distances.

    The total sums over ordered pairs i != j. Coincident points contribute a
    zero gradient direction for their pair (the stable subgradient choice).
    """

    kind = "stress"

    def __init__(self, targets, m: int, policy: str = "strict", cap_factor: float = 3.0):
        t, weights, capped = _apply_target_policy(targets, policy, cap_factor)
        self.targets = t
        self.weights = weights
        self.capped_pairs = capped
        self.n = t.shape[0]
        self.m = int(m)
        if self.m < 1:
            raise ValidationError(f"embedding dimension must be >= 1, got {m}")

    def loss(self, a: np.ndarray) -> float:
        delta = pairwise_distances(a)
        resid = self.weights * (self.targets - delta)
        with np.errstate(over="ignore"):  # inf is caught by the optimizer
            return float((resid * resid).sum())

    def grad(self, a: np.ndarray) -> np.ndarray:
        delta = pairwise_distances(a)
        with np.errstate(divide="ignore", invalid="ignore"):
            coeff = np.where(delta > 0, (delta - self.targets) / delta, 0.0)
        coeff *= self.weights
        # sum_j coeff_ij (A_i - A_j) = rowsum_i A_i - (coeff A)_i
        return 4.0 * (coeff.sum(axis=1)[:, None] * a - coeff @ a)

    def init_targets(self) -> np.ndarray:
        return self.targets


class CrossEntropyProblem:
    """Fuzzy cross-entropy between memberships and exp(-embedded distance).

    The low-dimensional membership v = exp(-distance) is clamped to
    [clamp, 1 - clamp] so the loss and gradient stay finite at distance 0.
    """

    kind = "fce"

    def __init__(self, w: MembershipMatrix, m: int, clamp: float = FCE_CLAMP_DEFAULT):
        if not 0.0 < clamp < 0.5:
            raise ValidationError(f"clamp must lie in (0, 0.5), got {clamp!r}")
        self.w = w.w
        self.n = w.n
        self.m = int(m)
        self.clamp = float(clamp)
        if self.m < 1:
            raise ValidationError(f"embedding dimension must be >= 1, got {m}")
        self._mask = ~np.eye(self.n, dtype=bool)

    def _v(self, delta: np.ndarray) -> np.ndarray:
        return np.clip(np.exp(-delta), self.clamp, 1.0 - self.clamp)

    def loss(self, a: np.ndarray) -> float:
        delta = pairwise_distances(a)
        v = self._v(delta)
        w = self.w
        with np.errstate(divide="ignore", invalid="ignore"):
            attract = np.where(w > 0, w * (np.log(np.where(w > 0, w, 1.0)) - np.log(v)), 0.0)
            repel = np.where(
                w < 1,
                (1 - w) * (np.log(np.where(w < 1, 1 - w, 1.0)) - np.log1p(-v)),
                0.0,
            )
        total = np.where(self._mask, attract + repel, 0.0)
        return float(total.sum())

    def grad(self, a: np.ndarray) -> np.ndarray:
        delta = pairwise_distances(a)
        raw_v = np.exp(-delta)
        clamped = (raw_v <= self.clamp) | (raw_v >= 1.0 - self.clamp)
        v = self._v(delta)
        # d(loss)/d(delta) = (w/v - (1-w)/(1-v)) * v  where v is active
        dldd = np.where(clamped, 0.0, self.w - (1.0 - self.w) * v / (1.0 - v))
        with np.errstate(divide="ignore", invalid="ignore"):
            coeff = np.where(delta > 0, dldd / delta, 0.0)
        coeff = np.where(self._mask, coeff, 0.0)
        return 2.0 * (coeff.sum(axis=1)[:, None] * a - coeff @ a)

    def init_targets(self) -> np.ndarray:
        with np.errstate(divide="ignore"):
            t = -np.log(self.w)
        np.fill_diagonal(t, 0.0)
        if not np.isfinite(t).all():
            finite = t[np.isfinite(t)]
            cap = 3.0 * (float(finite.max()) if finite.size else 1.0)
            t = np.where(np.isfinite(t), t, cap)
            np.fill_diagonal(t, 0.0)
        return t


def mds_stress_problem(
    targets, m: int, policy: str = "strict", cap_factor: float = 3.0
) -> StressProblem:
    """Stress problem over derived target distances (possibly with inf entries)."""
    return StressProblem(targets, m, policy, cap_factor)


def fce_problem(
    w: MembershipMatrix, m: int, clamp: float = FCE_CLAMP_DEFAULT
) -> CrossEntropyProblem:
    """Fuzzy cross-entropy problem over a membership matrix."""
    return CrossEntropyProblem(w, m, clamp)
