"""
Linear-chain inference shared by the feature CRF and the neural CRF layer.

A path ``y`` of length ``n`` scores

    start[y_0] + sum_t state[t, y_t] + sum_t trans[y_t, y_{t+1}] + end[y_{n-1}]

and every quantity here is computed in the log domain. Functions accept the
tensors of a :class:`Lattice` as they are, so gradients flow through
:func:`log_partition` and :func:`path_score` when the scores require them.
"""

from dataclasses import dataclass
from typing import Sequence

import torch
from torch import Tensor

from taglab.errors import NumericError


@dataclass(frozen=True)
class Lattice:
    """
    Scores of a linear chain.

    Attributes
    ----------
    state : Tensor
        ``(n, K)`` per-position tag scores.
    trans : Tensor
        ``(K, K)`` transition scores, from-tag by to-tag.
    start : Tensor
        ``(K,)`` scores of the first tag.
    end : Tensor
        ``(K,)`` scores of the last tag.
    """

    state: Tensor
    trans: Tensor
    start: Tensor
    end: Tensor

    def __post_init__(self) -> None:
        if self.state.dim() != 2 or self.state.shape[0] < 1 or self.state.shape[1] < 1:
            raise ValueError(f"state must be (n >= 1, K >= 1), got {tuple(self.state.shape)}")
        K = self.state.shape[1]
        if tuple(self.trans.shape) != (K, K):
            raise ValueError(f"trans must be ({K}, {K}), got {tuple(self.trans.shape)}")
        if tuple(self.start.shape) != (K,) or tuple(self.end.shape) != (K,):
            raise ValueError(f"start and end must have shape ({K},)")
        for name in ("state", "trans", "start", "end"):
            if not torch.isfinite(getattr(self, name)).all():
                raise NumericError(f"{name} scores must be finite")

    @property
    def n(self) -> int:
        return self.state.shape[0]

    @property
    def K(self) -> int:
        return self.state.shape[1]

    @classmethod
    def zeros(cls, n: int, K: int, dtype: torch.dtype = torch.float64) -> "Lattice":
        return cls(
            torch.zeros(n, K, dtype=dtype),
            torch.zeros(K, K, dtype=dtype),
            torch.zeros(K, dtype=dtype),
            torch.zeros(K, dtype=dtype),
        )

    @classmethod
    def from_emissions(
        cls, state: Tensor, trans: Tensor | None = None, start=None, end=None
    ) -> "Lattice":
        K = state.shape[1]
        zeros = torch.zeros(K, dtype=state.dtype)
        return cls(
            state,
            trans if trans is not None else torch.zeros(K, K, dtype=state.dtype),
            start if start is not None else zeros,
            end if end is not None else zeros,
        )


def _forward(L: Lattice) -> Tensor:
    """``alpha[t, j]``: log-sum of all prefixes ending in tag ``j`` at ``t``."""
    alphas = [L.start + L.state[0]]
    for t in range(1, L.n):
        prev = alphas[-1].unsqueeze(1) + L.trans
        alphas.append(torch.logsumexp(prev, dim=0) + L.state[t])
    return torch.stack(alphas)


def _backward(L: Lattice) -> Tensor:
    """``beta[t, i]``: log-sum of all suffixes after tag ``i`` at ``t``."""
    betas = [L.end]
    for t in range(L.n - 1, 0, -1):
        nxt = L.trans + (L.state[t] + betas[-1]).unsqueeze(0)
        betas.append(torch.logsumexp(nxt, dim=1))
    return torch.stack(betas[::-1])


def log_partition(L: Lattice) -> Tensor:
    """
    Log of the summed exponentiated scores of all ``K ** n`` paths.

    Returns
    -------
    Tensor
        Scalar; differentiable with respect to the lattice scores.
    """
    return torch.logsumexp(_forward(L)[-1] + L.end, dim=0)


def path_score(L: Lattice, y: Sequence[int]) -> Tensor:
    """
    Score of one tag path.

    Raises
    ------
    ValueError
        If ``len(y) != L.n``.
    """
    if len(y) != L.n:
        raise ValueError(f"Path has length {len(y)}, lattice has {L.n} positions")

    tags = torch.as_tensor(list(y), dtype=torch.long)
    score = L.start[tags[0]] + L.end[tags[-1]]
    score = score + L.state[torch.arange(L.n), tags].sum()
    if L.n > 1:
        score = score + L.trans[tags[:-1], tags[1:]].sum()
    return score


def marginals(L: Lattice) -> tuple[Tensor, Tensor]:
    """
    Posterior tag and tag-pair probabilities by forward-backward.

    Returns
    -------
    node : Tensor
        ``(n, K)``; ``node[t, j] = P(y_t = j)``.
    edge : Tensor
        ``(n - 1, K, K)``; ``edge[t, i, j] = P(y_t = i, y_{t+1} = j)``.
    """
    alpha, beta = _forward(L), _backward(L)
    log_z = torch.logsumexp(alpha[-1] + L.end, dim=0)

    node = torch.exp(alpha + beta - log_z)
    edge = torch.exp(
        alpha[:-1].unsqueeze(2)
        + L.trans.unsqueeze(0)
        + (L.state[1:] + beta[1:]).unsqueeze(1)
        - log_z
    )
    return node, edge


def viterbi(L: Lattice) -> tuple[list[int], float]:
    """
    Highest-scoring path and its score.

    Ties go to the lower tag index, both for the final tag and at every
    backtracking step.
    """
    with torch.no_grad():
        score = L.start + L.state[0]
        backpointers = []
        for t in range(1, L.n):
            candidates = score.unsqueeze(1) + L.trans
            argbest = candidates.argmax(dim=0)
            backpointers.append(argbest)
            score = candidates.gather(0, argbest.unsqueeze(0)).squeeze(0) + L.state[t]

        final = score + L.end
        last = int(torch.argmax(final))
        path = [last]
        for pointers in reversed(backpointers):
            path.append(int(pointers[path[-1]]))

    return path[::-1], float(final[last])
