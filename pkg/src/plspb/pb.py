"""Supervised and unsupervised principal balance construction.

Both builders grow a sequential binary partition of the parts. At every
node a one-component latent fit of the node's subcomposition supplies a
loading vector, the loading is turned into a nested family of candidate
sign patterns, and the candidate whose balance values score best is kept
(largest |cov| with the response for the supervised build, largest
variance for the unsupervised one). The recursion then descends into the
parts left out of the chosen balance, its numerator and its denominator.

When a chosen balance leaves parts out, the subtree below the node would
only yield d-2 balances; the basis is completed with a connecting balance
that contrasts the left-out parts (numerator) against the included ones
(denominator). It is orthogonal to everything else in the subtree because
each side is constant over the support of any nested balance.

The D-1 balances are finally sorted by their score, non-increasing.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .coda import (
    BalanceBasis,
    BalanceCoefficients,
    ClrMatrix,
    CompositionMatrix,
    SignVector,
    clr,
    signs_to_coefficients,
)
from .errors import ConstantResponse, OneSidedLoading, RankDeficient
from .latent import pca_fit, pls_fit

_TIE_TOL = 1e-12

MODE_COVARIANCE = "covariance"
MODE_VARIANCE = "variance"


@dataclass(frozen=True)
class PartitionNode:
    """One node of the sequential binary partition tree.

    ``chosen_balance`` and ``connecting_balance`` are embedded in the full
    D-part coefficient space; leaves (single parts) carry neither.
    """

    part_indices: tuple[int, ...]
    chosen_balance: BalanceCoefficients | None
    chosen_value: float | None
    connecting_balance: BalanceCoefficients | None
    connecting_value: float | None
    zero_child: "PartitionNode | None"
    numerator_child: "PartitionNode | None"
    denominator_child: "PartitionNode | None"

    def to_dict(self, part_names) -> dict:
        """JSON-ready view of the subtree, labeling parts by name."""
        names = [part_names[i] for i in self.part_indices]
        payload: dict = {"parts": names}
        if self.chosen_balance is not None:
            signs = self.chosen_balance.sign_vector.signs
            payload["balance"] = {
                "numerator": [part_names[i] for i in np.flatnonzero(signs == 1)],
                "denominator": [part_names[i] for i in np.flatnonzero(signs == -1)],
                "value": self.chosen_value,
            }
        if self.connecting_balance is not None:
            signs = self.connecting_balance.sign_vector.signs
            payload["connecting"] = {
                "numerator": [part_names[i] for i in np.flatnonzero(signs == 1)],
                "denominator": [part_names[i] for i in np.flatnonzero(signs == -1)],
                "value": self.connecting_value,
            }
        children = {}
        for key, child in (
            ("zero", self.zero_child),
            ("numerator", self.numerator_child),
            ("denominator", self.denominator_child),
        ):
            if child is not None:
                children[key] = child.to_dict(part_names)
        if children:
            payload["children"] = children
        return payload


def candidate_signs(p) -> list[SignVector]:
    """Derive the d-1 nested candidate sign patterns from a loading vector.

    The first candidate marks only the extremes: +1 at the largest entry
    of p, -1 at the smallest. Each following candidate copies the previous
    one and activates the remaining entry of largest magnitude with the
    sign it has in p, so candidate j has exactly j+1 active parts and the
    last candidate uses every part. Exact zeros, should they occur, enter
    last and count as positive.

    Raises
    ------
    OneSidedLoading
        If p has no positive or no negative entry, so no contrast exists.
    """
    p = np.asarray(p, dtype=float)
    if p.ndim != 1 or p.shape[0] < 2:
        raise ValueError("loading must be a 1-d vector with at least 2 entries")
    if not (np.any(p > 0) and np.any(p < 0)):
        raise OneSidedLoading("loading entries all share one sign")
    d = p.shape[0]
    signs = np.zeros(d, dtype=int)
    i_max = int(np.argmax(p))
    i_min = int(np.argmin(p))
    signs[i_max] = 1
    signs[i_min] = -1
    candidates = [SignVector(signs.copy())]
    order = np.argsort(-np.abs(p), kind="stable")
    for idx in order:
        if signs[idx] != 0:
            continue
        signs[idx] = 1 if p[idx] >= 0 else -1
        candidates.append(SignVector(signs.copy()))
    return candidates


def _coefficients_for_candidates(sign_matrix: np.ndarray) -> np.ndarray:
    """Vectorized sign-to-coefficient conversion, one candidate per column."""
    r = (sign_matrix == 1).sum(axis=0)
    s = (sign_matrix == -1).sum(axis=0)
    pos = np.sqrt(s / ((r + s) * r))
    neg = -np.sqrt(r / ((r + s) * s))
    return np.where(sign_matrix == 1, pos, 0.0) + np.where(sign_matrix == -1, neg, 0.0)


def _select_candidate(log_values, y, candidates, mode):
    """Score every candidate and pick the winner.

    Returns (index, score). Ties within 1e-12 go to the candidate with the
    fewest active parts, then to the lowest index.
    """
    sign_matrix = np.stack([c.signs for c in candidates], axis=1)
    coeff_matrix = _coefficients_for_candidates(sign_matrix)
    values = log_values @ coeff_matrix
    centered = values - values.mean(axis=0)
    n = values.shape[0]
    if mode == MODE_COVARIANCE:
        yc = y - y.mean()
        scores = np.abs(centered.T @ yc) / (n - 1)
    else:
        scores = (centered * centered).sum(axis=0) / (n - 1)
    best = scores.max()
    tied = np.flatnonzero(scores >= best - _TIE_TOL)
    active_counts = np.abs(sign_matrix[:, tied]).sum(axis=0)
    winner = int(tied[np.argmin(active_counts)])
    return winner, float(scores[winner])


def best_balance(
    Xsub: CompositionMatrix, y, candidates: list[SignVector]
) -> tuple[BalanceCoefficients, float]:
    """Pick the candidate balance with the largest |cov| against y.

    Covariance uses the n-1 divisor. Ties within 1e-12 are broken by the
    fewest active parts, then the lowest candidate index.
    """
    if not candidates:
        raise ValueError("candidate list is empty")
    y = np.asarray(y, dtype=float)
    if y.shape != (Xsub.n_samples,):
        raise ValueError("response length must match the sample count")
    winner, score = _select_candidate(
        np.log(Xsub.values), y, candidates, MODE_COVARIANCE
    )
    return signs_to_coefficients(candidates[winner]), score


def _fallback_loading(d: int) -> np.ndarray:
    """Deterministic two-sided loading for nodes without usable signal."""
    return np.linspace(1.0, -1.0, d)


def _node_loading(Xsub: CompositionMatrix, y, mode) -> np.ndarray:
    """One-component latent direction of a subcomposition.

    Falls back to a deterministic index-based split when the subcomposition
    is numerically constant relative to its log scale, or when the response
    carries no signal for it; every candidate scores zero in those cases.
    """
    raw = clr(Xsub)
    centered_values = raw.values - raw.values.mean(axis=0)
    log_scale = max(1.0, float(np.linalg.norm(np.log(Xsub.values))))
    if np.linalg.norm(centered_values) <= 1e-12 * log_scale:
        return _fallback_loading(Xsub.n_parts)
    centered = ClrMatrix(centered_values, centered=True)
    try:
        if mode == MODE_COVARIANCE:
            model = pls_fit(centered, y, 1)
        else:
            model = pca_fit(centered, 1)
        return model.weights[:, 0]
    except RankDeficient:
        return _fallback_loading(Xsub.n_parts)


def _candidates_from_loading(p: np.ndarray) -> list[SignVector]:
    try:
        return candidate_signs(p)
    except OneSidedLoading:
        centered = p - p.mean()
        if np.max(np.abs(centered)) <= _TIE_TOL * max(1.0, np.max(np.abs(p))):
            centered = _fallback_loading(p.shape[0])
        return candidate_signs(centered)


def _connecting_score(log_values, y, coeffs, mode):
    values = log_values @ coeffs
    centered = values - values.mean()
    n = values.shape[0]
    if mode == MODE_COVARIANCE:
        yc = y - y.mean()
        return float(abs(centered @ yc) / (n - 1))
    return float(centered @ centered / (n - 1))


def _embed(coeffs: BalanceCoefficients, indices: np.ndarray, n_parts: int) -> BalanceCoefficients:
    full = np.zeros(n_parts)
    full[indices] = coeffs.coeffs
    return BalanceCoefficients(full, coeffs.numerator_count, coeffs.denominator_count)


def _build_partition(X: CompositionMatrix, y, mode, indices: np.ndarray, collected: list):
    """Recursive sequential binary partition over ``indices``.

    Appends (embedded BalanceCoefficients, score) pairs to ``collected`` and
    returns the PartitionNode for this subset, or None for single parts.
    """
    d = indices.shape[0]
    if d < 2:
        return None
    Xsub = X.take_parts(indices)
    log_values = np.log(Xsub.values)
    loading = _node_loading(Xsub, y, mode)
    candidates = _candidates_from_loading(loading)
    winner, score = _select_candidate(log_values, y, candidates, mode)
    local = signs_to_coefficients(candidates[winner])
    chosen = _embed(local, indices, X.n_parts)
    collected.append((chosen, score))

    signs = candidates[winner].signs
    zero_idx = indices[signs == 0]
    num_idx = indices[signs == 1]
    den_idx = indices[signs == -1]

    connecting = None
    connecting_score = None
    if zero_idx.shape[0] > 0:
        link_signs = np.where(signs == 0, 1, -1)
        link_local = signs_to_coefficients(SignVector(link_signs))
        connecting = _embed(link_local, indices, X.n_parts)
        connecting_score = _connecting_score(log_values, y, link_local.coeffs, mode)
        collected.append((connecting, connecting_score))

    zero_child = _build_partition(X, y, mode, zero_idx, collected)
    numerator_child = _build_partition(X, y, mode, num_idx, collected)
    denominator_child = _build_partition(X, y, mode, den_idx, collected)
    return PartitionNode(
        part_indices=tuple(int(i) for i in indices),
        chosen_balance=chosen,
        chosen_value=score,
        connecting_balance=connecting,
        connecting_value=connecting_score,
        zero_child=zero_child,
        numerator_child=numerator_child,
        denominator_child=denominator_child,
    )


def _assemble_basis(X: CompositionMatrix, collected, mode) -> BalanceBasis:
    coeffs = np.stack([c.coeffs for c, _ in collected], axis=1)
    values = np.array([v for _, v in collected])
    order = np.argsort(-values, kind="stable")
    coeffs = coeffs[:, order]
    values = values[order]
    signs = np.sign(coeffs).astype(int)
    if mode == MODE_COVARIANCE:
        return BalanceBasis(
            coeffs, signs, covariances=values, part_names=X.part_names
        )
    return BalanceBasis(coeffs, signs, variances=values, part_names=X.part_names)


def pls_pb(X: CompositionMatrix, y, return_tree: bool = False):
    """Build the full supervised principal balance basis.

    Returns a BalanceBasis of D-1 orthonormal balances sorted by |cov|
    with the response, non-increasing. With ``return_tree=True`` also
    returns the PartitionNode tree describing the recursion.

    The response is centered once, globally; node fits reuse it unchanged.
    """
    y = np.asarray(y, dtype=float)
    if X.n_samples < 3:
        raise ValueError("need at least 3 samples")
    if y.shape != (X.n_samples,):
        raise ValueError("response length must match the sample count")
    if np.ptp(y) == 0.0:
        raise ConstantResponse("response has zero variance")
    yc = y - y.mean()
    collected: list = []
    tree = _build_partition(X, yc, MODE_COVARIANCE, np.arange(X.n_parts), collected)
    basis = _assemble_basis(X, collected, MODE_COVARIANCE)
    return (basis, tree) if return_tree else basis


def pca_pb(X: CompositionMatrix, return_tree: bool = False):
    """Build the unsupervised principal balance basis.

    Same recursion as the supervised build, but each node's loading is the
    first principal direction of its subcomposition and candidates are
    scored by the variance of their balance values. Sorted by variance,
    non-increasing.
    """
    if X.n_samples < 3:
        raise ValueError("need at least 3 samples")
    collected: list = []
    tree = _build_partition(X, None, MODE_VARIANCE, np.arange(X.n_parts), collected)
    basis = _assemble_basis(X, collected, MODE_VARIANCE)
    return (basis, tree) if return_tree else basis


def nested_or_disjoint(sign_matrix: np.ndarray) -> bool:
    """Check the partition structure of a basis sign matrix.

    In a valid sequential binary partition the supports of any two balances
    are either disjoint or nested, and a balance nested inside another sits
    entirely within one of the outer balance's sign groups.
    """
    s = np.asarray(sign_matrix)
    supports = [frozenset(np.flatnonzero(col != 0)) for col in s.T]
    for a in range(len(supports)):
        for b in range(a + 1, len(supports)):
            inter = supports[a] & supports[b]
            if not inter:
                continue
            if inter == supports[a]:
                inner, outer = a, b
            elif inter == supports[b]:
                inner, outer = b, a
            else:
                return False
            outer_signs = {s[i, outer] for i in supports[inner]}
            if len(outer_signs) != 1:
                return False
    return True
