"""Graph-conditioned variational autoencoder over fixed-length windows.

Two MLP encoders embed a window and its flattened transition graph; a
posterior head maps the concatenated raw embeddings to a diagonal Gaussian
over the latent; the decoder consumes the raw graph embedding together with
the latent sample. Training minimizes

    w_align * align + w_recon * recon + w_dist * dist + beta * kl

with a symmetric contrastive alignment term, mean-squared reconstruction,
an order-statistics (sorted-value) match, and a KL term annealed linearly
from 0 to beta_max.

Variants: ``no_graph`` swaps every conditioning vector for the flattened
identity matrix (architecture unchanged); ``deterministic`` removes the
posterior/latent path entirely and decodes the normalized graph embedding.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Iterator

import numpy as np

from . import autodiff as ad
from .autodiff import Tape, Var
from .dataset import DatasetSplit
from .optim import ParamStore, adam_step
from .quantile_graph import (
    QuantileBoundaries,
    fit_boundaries,
    identity_graph,
    windows_to_graphs,
)

__all__ = [
    "VARIANTS",
    "TrainConfig",
    "LossBreakdown",
    "Graph2TS",
    "init_params",
    "encode_ts",
    "encode_graph",
    "posterior",
    "reparameterize",
    "decode",
    "loss_align",
    "loss_recon",
    "loss_dist",
    "loss_kl",
    "beta_schedule",
    "batch_objective",
    "objective_value",
    "train",
    "generate",
]

VARIANTS = ("full", "no_graph", "deterministic")

LOGVAR_MIN = -10.0
LOGVAR_MAX = 10.0
INIT_TEMPERATURE = 0.07


@dataclass(frozen=True)
class TrainConfig:
    window_length: int = 32
    n_states: int = 10
    embed_dim: int = 128
    latent_dim: int = 32
    w_align: float = 1.0
    w_recon: float = 5.0
    w_dist: float = 1.0
    beta_max: float = 0.05
    kl_warmup_epochs: int = 50
    lr: float = 3e-4
    batch_size: int = 4096
    epochs: int = 300
    seed: int = 0
    variant: str = "full"

    def __post_init__(self):
        for name in ("window_length", "n_states", "embed_dim", "latent_dim",
                     "batch_size", "epochs"):
            if getattr(self, name) < 1:
                raise ValueError(f"{name} must be positive")
        for name in ("w_align", "w_recon", "w_dist", "beta_max", "lr"):
            if getattr(self, name) < 0:
                raise ValueError(f"{name} must be non-negative")
        if self.kl_warmup_epochs < 0:
            raise ValueError("kl_warmup_epochs must be non-negative")
        if self.variant not in VARIANTS:
            raise ValueError(f"variant must be one of {VARIANTS}")

    @property
    def graph_dim(self) -> int:
        return self.n_states * self.n_states


@dataclass(frozen=True)
class LossBreakdown:
    align: float
    recon: float
    dist: float
    kl: float
    beta: float
    total: float


# ---------------------------------------------------------------------------
# parameters
# ---------------------------------------------------------------------------

def _glorot(rng: np.random.Generator, fan_in: int, fan_out: int) -> np.ndarray:
    limit = np.sqrt(6.0 / (fan_in + fan_out))
    return rng.uniform(-limit, limit, size=(fan_in, fan_out))


def init_params(config: TrainConfig, rng: np.random.Generator) -> dict[str, np.ndarray]:
    """Glorot-uniform weights, zero biases, temperature stored as its log."""
    e = config.embed_dim
    t = config.window_length
    g = config.graph_dim
    dz = config.latent_dim
    dec_in = e if config.variant == "deterministic" else e + dz

    def block(prefix: str, n_in: int, hidden: int, n_out: int) -> dict[str, np.ndarray]:
        return {
            f"{prefix}.w1": _glorot(rng, n_in, hidden),
            f"{prefix}.b1": np.zeros((1, hidden)),
            f"{prefix}.w2": _glorot(rng, hidden, n_out),
            f"{prefix}.b2": np.zeros((1, n_out)),
        }

    params: dict[str, np.ndarray] = {}
    params.update(block("ts_enc", t, e, e))
    params.update(block("g_enc", g, e, e))
    if config.variant != "deterministic":
        params.update(block("post", 2 * e, e, 2 * dz))
    params.update(block("dec", dec_in, e, t))
    params["log_temp"] = np.full((1, 1), np.log(INIT_TEMPERATURE))
    return params


def _mlp2(p: dict[str, Var], prefix: str, x: Var) -> Var:
    h = ad.relu(ad.affine(x, p[f"{prefix}.w1"], p[f"{prefix}.b1"]))
    return ad.affine(h, p[f"{prefix}.w2"], p[f"{prefix}.b2"])


def encode_ts(p: dict[str, Var], x: Var) -> Var:
    """Raw window embedding: two affine layers with a ReLU between."""
    return _mlp2(p, "ts_enc", x)


def encode_graph(p: dict[str, Var], g: Var) -> Var:
    """Raw graph embedding from the flattened transition matrix."""
    return _mlp2(p, "g_enc", g)


def posterior(p: dict[str, Var], t_raw: Var, g_raw: Var, latent_dim: int) -> tuple[Var, Var]:
    """(mu, logvar) from the concatenated raw embeddings; logvar clamped."""
    out = _mlp2(p, "post", ad.concat_cols(t_raw, g_raw))
    mu = ad.slice_cols(out, 0, latent_dim)
    logvar = ad.clamp(ad.slice_cols(out, latent_dim, 2 * latent_dim), LOGVAR_MIN, LOGVAR_MAX)
    return mu, logvar


def reparameterize(mu: Var, logvar: Var, eps: np.ndarray) -> Var:
    """z = mu + exp(logvar / 2) * eps with eps an untracked standard-normal draw."""
    return ad.add(mu, ad.scale(ad.exp(ad.scale(logvar, 0.5)), eps))


def decode(p: dict[str, Var], g_raw: Var, z: Var | None, variant: str) -> Var:
    """Windows from conditioning embedding (+ latent); linear output layer.

    The deterministic variant decodes the normalized graph embedding alone,
    so its output cannot depend on any latent draw.
    """
    if variant == "deterministic":
        inp = ad.l2_normalize_rows(g_raw)
    else:
        if z is None:
            raise ValueError("variant requires a latent sample")
        inp = ad.concat_cols(g_raw, z)
    return _mlp2(p, "dec", inp)


# ---------------------------------------------------------------------------
# loss terms
# ---------------------------------------------------------------------------

def loss_align(t_raw: Var, g_raw: Var, log_temp: Var) -> Var:
    """Symmetric contrastive alignment of normalized embeddings.

    Similarities are scaled by a learnable temperature; matched pairs sit on
    the diagonal and in-batch non-partners act as negatives, in both the
    window->graph and graph->window directions.
    """
    th = ad.l2_normalize_rows(t_raw)
    gh = ad.l2_normalize_rows(g_raw)
    s = ad.mul(ad.matmul_nt(th, gh), ad.exp(ad.scale(log_temp, -1.0)))
    ce_rows = ad.mean_all(ad.sub(ad.logsumexp_rows(s), ad.take_diag(s)))
    st = ad.transpose(s)
    ce_cols = ad.mean_all(ad.sub(ad.logsumexp_rows(st), ad.take_diag(st)))
    return ad.scale(ad.add(ce_rows, ce_cols), 0.5)


def loss_recon(x_hat: Var, x: np.ndarray) -> Var:
    """Mean squared error, averaged over batch and time so weights stay scale-free."""
    d = ad.add_const(x_hat, -x)
    return ad.mean_all(ad.mul(d, d))


def loss_dist(x_hat: Var, x: np.ndarray) -> Var:
    """Order-statistics match: squared gap between per-row sorted values.

    The sort permutation is a constant of the backward pass; gradients scatter
    back through it to the positions the sorted values came from.
    """
    sorted_hat, _ = ad.sort_rows(x_hat)
    d = ad.add_const(sorted_hat, -np.sort(x, axis=1))
    return ad.mean_all(ad.mul(d, d))


def loss_kl(mu: Var, logvar: Var) -> Var:
    """KL from the diagonal posterior to the standard normal, meaned over the batch."""
    inner = ad.add_const(
        ad.add(ad.add(ad.mul(mu, mu), ad.exp(logvar)), ad.scale(logvar, -1.0)),
        -1.0,
    )
    return ad.scale(ad.sum_all(inner), 0.5 / mu.value.shape[0])


def beta_schedule(epoch: int, warmup: int, beta_max: float) -> float:
    """Linear anneal: beta_max * min(1, epoch / warmup); epochs count from 0."""
    if epoch < 0:
        raise ValueError("epoch must be non-negative")
    if warmup <= 0:
        return beta_max
    return beta_max * min(1.0, epoch / warmup)


def batch_objective(
    p: dict[str, Var],
    x: np.ndarray,
    graphs: np.ndarray,
    eps: np.ndarray | None,
    config: TrainConfig,
    beta: float,
) -> tuple[Var, LossBreakdown]:
    """Weighted total for one batch plus the raw per-term values.

    All four raw losses are reported even when their weight is zero, so
    knockout runs still log every component.
    """
    t_raw = encode_ts(p, _leaf_of(p, x))
    g_raw = encode_graph(p, _leaf_of(p, graphs))
    align = loss_align(t_raw, g_raw, p["log_temp"])
    if config.variant == "deterministic":
        x_hat = decode(p, g_raw, None, config.variant)
        kl = None
    else:
        mu, logvar = posterior(p, t_raw, g_raw, config.latent_dim)
        z = reparameterize(mu, logvar, eps)
        x_hat = decode(p, g_raw, z, config.variant)
        kl = loss_kl(mu, logvar)
    recon = loss_recon(x_hat, x)
    dist = loss_dist(x_hat, x)

    total = ad.add(
        ad.add(ad.scale(align, config.w_align), ad.scale(recon, config.w_recon)),
        ad.scale(dist, config.w_dist),
    )
    if kl is not None:
        total = ad.add(total, ad.scale(kl, beta))
    parts = LossBreakdown(
        align=float(align.value[0, 0]),
        recon=float(recon.value[0, 0]),
        dist=float(dist.value[0, 0]),
        kl=0.0 if kl is None else float(kl.value[0, 0]),
        beta=beta,
        total=float(total.value[0, 0]),
    )
    return total, parts


def _leaf_of(p: dict[str, Var], arr: np.ndarray) -> Var:
    # inputs join the computation as leaves on the same tape as the parameters
    return next(iter(p.values())).tape.leaf(arr)


def objective_value(
    params: dict[str, np.ndarray],
    x: np.ndarray,
    graphs: np.ndarray,
    eps: np.ndarray | None,
    config: TrainConfig,
    beta: float,
) -> float:
    """The same weighted total as :func:`batch_objective`, written in plain numpy.

    Kept deliberately separate from the tape ops so finite-difference probes
    check the tape against an independent evaluation of the objective.
    """
    def mlp2(prefix: str, inp: np.ndarray) -> np.ndarray:
        h = np.maximum(inp @ params[f"{prefix}.w1"] + params[f"{prefix}.b1"], 0.0)
        return h @ params[f"{prefix}.w2"] + params[f"{prefix}.b2"]

    def l2n(v: np.ndarray) -> np.ndarray:
        return v / np.sqrt((v * v).sum(axis=1, keepdims=True))

    def lse_rows(v: np.ndarray) -> np.ndarray:
        m = v.max(axis=1, keepdims=True)
        return (m + np.log(np.exp(v - m).sum(axis=1, keepdims=True)))[:, 0]

    t_raw = mlp2("ts_enc", x)
    g_raw = mlp2("g_enc", graphs)
    s = (l2n(t_raw) @ l2n(g_raw).T) * np.exp(-params["log_temp"][0, 0])
    diag = np.diagonal(s)
    align = 0.5 * ((lse_rows(s) - diag).mean() + (lse_rows(s.T) - diag).mean())

    if config.variant == "deterministic":
        x_hat = mlp2("dec", l2n(g_raw))
        kl = 0.0
    else:
        post = mlp2("post", np.hstack([t_raw, g_raw]))
        mu = post[:, : config.latent_dim]
        logvar = np.clip(post[:, config.latent_dim :], LOGVAR_MIN, LOGVAR_MAX)
        z = mu + np.exp(0.5 * logvar) * eps
        x_hat = mlp2("dec", np.hstack([g_raw, z]))
        kl = 0.5 * (mu * mu + np.exp(logvar) - 1.0 - logvar).sum() / x.shape[0]

    recon = ((x_hat - x) ** 2).mean()
    dist = ((np.sort(x_hat, axis=1) - np.sort(x, axis=1)) ** 2).mean()
    return (
        config.w_align * align
        + config.w_recon * recon
        + config.w_dist * dist
        + beta * kl
    )


# ---------------------------------------------------------------------------
# trained model container
# ---------------------------------------------------------------------------

@dataclass
class Graph2TS:
    """A trained (or freshly initialized) model: config, weights, boundaries."""

    config: TrainConfig
    params: dict[str, np.ndarray]
    boundaries: QuantileBoundaries | None = None
    best_epoch: int = -1

    def _leaves(self, tape: Tape) -> dict[str, Var]:
        return {k: tape.leaf(v) for k, v in self.params.items()}

    def ts_embeddings(self, windows: np.ndarray) -> np.ndarray:
        tape = Tape(record=False)
        p = self._leaves(tape)
        return encode_ts(p, tape.leaf(windows)).value

    def graph_embeddings(self, graphs: np.ndarray) -> np.ndarray:
        tape = Tape(record=False)
        p = self._leaves(tape)
        return encode_graph(p, tape.leaf(self._conditioning(graphs))).value

    def _conditioning(self, graphs: np.ndarray) -> np.ndarray:
        g = np.atleast_2d(np.asarray(graphs, dtype=np.float64))
        if g.shape[1] != self.config.graph_dim:
            raise ValueError(
                f"graphs have width {g.shape[1]}, expected {self.config.graph_dim}"
            )
        if self.config.variant == "no_graph":
            g = np.tile(identity_graph(self.config.n_states).reshape(1, -1), (g.shape[0], 1))
        return g

    def generate(self, graphs: np.ndarray, n_per_graph: int = 1, seed: int = 0) -> np.ndarray:
        """Sample n_per_graph windows per conditioning graph.

        The full model draws independent latents per sample; the deterministic
        variant decodes each graph once and repeats the result (its output is
        invariant to the seed by construction).
        """
        if n_per_graph < 1:
            raise ValueError("n_per_graph must be positive")
        g = self._conditioning(graphs)
        tape = Tape(record=False)
        p = self._leaves(tape)
        g_raw = encode_graph(p, tape.leaf(g))
        if self.config.variant == "deterministic":
            out = decode(p, g_raw, None, "deterministic").value
            return np.repeat(out, n_per_graph, axis=0)
        rng = np.random.default_rng(seed)
        rep = Var(np.repeat(g_raw.value, n_per_graph, axis=0), tape)
        eps = rng.standard_normal((rep.value.shape[0], self.config.latent_dim))
        return decode(p, rep, Var(eps, tape), self.config.variant).value


# ---------------------------------------------------------------------------
# training
# ---------------------------------------------------------------------------

def _batches(order: np.ndarray, batch_size: int) -> Iterator[np.ndarray]:
    for lo in range(0, order.size, batch_size):
        yield order[lo : lo + batch_size]


def train(config: TrainConfig, data: DatasetSplit) -> tuple[Graph2TS, list[LossBreakdown]]:
    """Seeded full training run; returns the best checkpoint and per-epoch log.

    Per epoch the train windows are reshuffled, minibatches are stepped with
    Adam, and the sample-weighted epoch mean of the objective (with that
    epoch's annealed beta) is logged. The returned parameters are the end-of-
    epoch snapshot from the epoch with the lowest logged mean total.
    """
    x_train = np.asarray(data.train, dtype=np.float64)
    if x_train.size == 0:
        raise ValueError("empty training split")
    if x_train.shape[1] != config.window_length:
        raise ValueError("window length differs from config")

    bounds = fit_boundaries(x_train.ravel(), config.n_states)
    if config.variant == "no_graph":
        graphs = np.tile(
            identity_graph(config.n_states).reshape(1, -1), (x_train.shape[0], 1)
        )
    else:
        graphs = windows_to_graphs(x_train, bounds)

    rng = np.random.default_rng(config.seed)
    store = ParamStore(init_params(config, rng))
    n = x_train.shape[0]
    log: list[LossBreakdown] = []
    best_total = np.inf
    best_params = store.copy_params()
    best_epoch = -1

    for epoch in range(config.epochs):
        beta = beta_schedule(epoch, config.kl_warmup_epochs, config.beta_max)
        order = rng.permutation(n)
        sums = np.zeros(5)  # align, recon, dist, kl, total
        for b_idx, idx in enumerate(_batches(order, config.batch_size)):
            x = x_train[idx]
            g = graphs[idx]
            eps = None
            if config.variant != "deterministic":
                eps = rng.standard_normal((idx.size, config.latent_dim))
            tape = Tape()
            leaves = {k: tape.leaf(v) for k, v in store.params.items()}
            try:
                total, parts = batch_objective(leaves, x, g, eps, config, beta)
                tape.backward(total)
                grads = {
                    k: (leaves[k].grad if leaves[k].grad is not None
                        else np.zeros_like(leaves[k].value))
                    for k in store.params
                }
                adam_step(store, grads, config.lr)
            except FloatingPointError as err:
                raise RuntimeError(
                    f"non-finite loss at epoch {epoch}, batch {b_idx}: {err}"
                ) from err
            sums += idx.size * np.array(
                [parts.align, parts.recon, parts.dist, parts.kl, parts.total]
            )
        means = sums / n
        entry = LossBreakdown(
            align=float(means[0]), recon=float(means[1]), dist=float(means[2]),
            kl=float(means[3]), beta=beta, total=float(means[4]),
        )
        log.append(entry)
        if entry.total < best_total:
            best_total = entry.total
            best_params = store.copy_params()
            best_epoch = epoch

    model = Graph2TS(config=config, params=best_params, boundaries=bounds,
                     best_epoch=best_epoch)
    return model, log


def generate(
    model: Graph2TS, graphs: np.ndarray, n_per_graph: int = 1, seed: int = 0
) -> np.ndarray:
    """Functional alias for :meth:`Graph2TS.generate`."""
    return model.generate(graphs, n_per_graph=n_per_graph, seed=seed)
