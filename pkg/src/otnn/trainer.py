"""Transfer training guided by neighborhood-masked unbalanced OT.

The model is a learned affine projection (encoder) over fixed sentence
embeddings followed by a linear softmax classifier. Training alternates
two steps per mini-batch:

* gamma step: solve for the transport plan on the *fixed* sentence
  embeddings (squared l2 distance) combined with 0/1 ground-truth label
  disagreement, after masking non-neighbor pairs to the batch maximum
  cost;
* model step: holding the plan fixed, descend the coupled loss on the
  *learned* representations, where the label term is the cross-entropy
  of source predictions against target labels, plus the weighted source
  and target cross-entropies.

Gradients are analytic throughout and checked against central finite
differences by :func:`grad_check`. Fine-tuning baselines (target-only,
sequential, mixed, neighbor-restricted mixed) share the same model and
optimizer.
"""

from __future__ import annotations

import csv
import struct
from dataclasses import dataclass

import numpy as np

from .config import TrainConfig
from .data import Dataset, make_uniform_measure
from .errors import (
    ConfigError,
    FormatError,
    NumericalError,
    ShapeError,
    ValidationError,
)
from .neighbors import (
    NeighborSet,
    build_index,
    compute_neighbor_sets,
    neighborhood_mask,
    preselect_sources,
)
from .solver import (
    OTParams,
    TransportPlan,
    generalized_kl,
    sinkhorn_unbalanced,
    squared_l2_cost,
    _xlogx,
)

N_CLASSES = 2

MODEL_MAGIC = b"OTNM"
MODEL_VERSION = 1
_MODEL_HEADER = struct.Struct("<4sIIII")  # magic, version, dim, hidden, classes


@dataclass
class ModelParams:
    """Affine encoder (dim -> hidden) plus linear softmax classifier."""

    w_enc: np.ndarray
    b_enc: np.ndarray
    w_clf: np.ndarray
    b_clf: np.ndarray

    def __post_init__(self):
        # contiguity matters: grad_check perturbs entries through ravel views
        self.w_enc = np.ascontiguousarray(self.w_enc, dtype=np.float64)
        self.b_enc = np.ascontiguousarray(self.b_enc, dtype=np.float64)
        self.w_clf = np.ascontiguousarray(self.w_clf, dtype=np.float64)
        self.b_clf = np.ascontiguousarray(self.b_clf, dtype=np.float64)
        h, d = self.w_enc.shape
        if self.b_enc.shape != (h,):
            raise ShapeError("encoder bias does not match encoder weight rows")
        if self.w_clf.shape[1] != h:
            raise ShapeError("classifier weight does not match encoder output")
        if self.b_clf.shape != (self.w_clf.shape[0],):
            raise ShapeError("classifier bias does not match classifier rows")
        for arr in (self.w_enc, self.b_enc, self.w_clf, self.b_clf):
            if not np.all(np.isfinite(arr)):
                raise ValidationError("model parameters must be finite")

    @property
    def dim(self) -> int:
        return self.w_enc.shape[1]

    @property
    def hidden_dim(self) -> int:
        return self.w_enc.shape[0]

    def copy(self) -> "ModelParams":
        return ModelParams(
            self.w_enc.copy(), self.b_enc.copy(), self.w_clf.copy(), self.b_clf.copy()
        )

    def fields(self):
        return (
            ("w_enc", self.w_enc),
            ("b_enc", self.b_enc),
            ("w_clf", self.w_clf),
            ("b_clf", self.b_clf),
        )


@dataclass
class Gradients:
    w_enc: np.ndarray
    b_enc: np.ndarray
    w_clf: np.ndarray
    b_clf: np.ndarray

    def fields(self):
        return (
            ("w_enc", self.w_enc),
            ("b_enc", self.b_enc),
            ("w_clf", self.w_clf),
            ("b_clf", self.b_clf),
        )


@dataclass
class BatchPair:
    """Equal-sized source and target halves of one mini-batch."""

    src_embeddings: np.ndarray
    src_labels: np.ndarray
    src_ids: np.ndarray
    tgt_embeddings: np.ndarray
    tgt_labels: np.ndarray
    tgt_ids: np.ndarray

    def __post_init__(self):
        if len(self.src_labels) != len(self.tgt_labels):
            raise ValidationError("batch halves must have equal counts")

    @property
    def m(self) -> int:
        return len(self.src_labels)


@dataclass
class LossBreakdown:
    """Loss terms; total = theta_s*source_ce + theta_t*target_ce
    + ot_transport + ot_entropy + ot_kl."""

    source_ce: float
    target_ce: float
    ot_transport: float
    ot_entropy: float
    ot_kl: float
    total: float

    FIELDS = ("source_ce", "target_ce", "ot_transport", "ot_entropy", "ot_kl", "total")

    def as_tuple(self):
        return (
            self.source_ce,
            self.target_ce,
            self.ot_transport,
            self.ot_entropy,
            self.ot_kl,
            self.total,
        )


def init_params(dim: int, hidden_dim: int, rng: np.random.Generator) -> ModelParams:
    w_enc = rng.normal(0.0, 1.0 / np.sqrt(dim), size=(hidden_dim, dim))
    b_enc = np.zeros(hidden_dim)
    w_clf = rng.normal(0.0, 1.0 / np.sqrt(hidden_dim), size=(N_CLASSES, hidden_dim))
    b_clf = np.zeros(N_CLASSES)
    return ModelParams(w_enc, b_enc, w_clf, b_clf)


def encode(params: ModelParams, x: np.ndarray) -> np.ndarray:
    """Affine projection W x + b; accepts a single vector or a batch."""
    x = np.asarray(x, dtype=np.float64)
    single = x.ndim == 1
    X = np.atleast_2d(x)
    if X.shape[1] != params.dim:
        raise ShapeError(f"input dim {X.shape[1]} != encoder dim {params.dim}")
    Z = X @ params.w_enc.T + params.b_enc
    return Z[0] if single else Z


def _logits(params: ModelParams, z: np.ndarray) -> np.ndarray:
    z = np.asarray(z, dtype=np.float64)
    single = z.ndim == 1
    Z = np.atleast_2d(z)
    if Z.shape[1] != params.hidden_dim:
        raise ShapeError(
            f"representation dim {Z.shape[1]} != classifier dim {params.hidden_dim}"
        )
    L = Z @ params.w_clf.T + params.b_clf
    return L[0] if single else L


def _log_softmax(logits: np.ndarray) -> np.ndarray:
    m = logits.max(axis=-1, keepdims=True)
    shifted = logits - m
    return shifted - np.log(np.exp(shifted).sum(axis=-1, keepdims=True))


def classify(params: ModelParams, z: np.ndarray) -> np.ndarray:
    """Softmax class probabilities from a representation (or batch)."""
    return np.exp(_log_softmax(_logits(params, z)))


def predict_labels(params: ModelParams, embeddings: np.ndarray) -> np.ndarray:
    """Hard class predictions for raw sentence embeddings."""
    return np.argmax(_logits(params, encode(params, embeddings)), axis=-1)


def jdot_cost(ed, lc, alpha: float, beta: float, use_ed: bool, use_lc: bool) -> np.ndarray:
    """Weighted joint cost alpha*ED + beta*LC with ablation switches."""
    if not (use_ed or use_lc):
        raise ValidationError("degenerate cost: both ED and LC disabled")
    ed = np.asarray(ed, dtype=np.float64)
    lc = np.asarray(lc, dtype=np.float64)
    if ed.shape != lc.shape:
        raise ShapeError(f"ED shape {ed.shape} != LC shape {lc.shape}")
    out = np.zeros_like(ed)
    if use_ed:
        out += alpha * ed
    if use_lc:
        out += beta * lc
    return out


def _ot_params(cfg: TrainConfig) -> OTParams:
    return OTParams(cfg.epsilon, cfg.lam, cfg.solver_tol, cfg.solver_max_iter)


def label_disagreement(src_labels, tgt_labels) -> np.ndarray:
    """0/1 indicator cost: 0 when labels match, 1 otherwise."""
    src = np.asarray(src_labels)
    tgt = np.asarray(tgt_labels)
    return (src[:, None] != tgt[None, :]).astype(np.float64)


def batch_joint_cost(batch: BatchPair, cfg: TrainConfig) -> np.ndarray:
    """Joint cost on the fixed sentence embeddings (pre-masking)."""
    ed = squared_l2_cost(batch.src_embeddings, batch.tgt_embeddings)
    lc = label_disagreement(batch.src_labels, batch.tgt_labels)
    return jdot_cost(ed, lc, cfg.alpha, cfg.beta, cfg.use_ed, cfg.use_lc)


def gamma_step(
    batch: BatchPair, neighbors: NeighborSet | None, cfg: TrainConfig
) -> TransportPlan:
    """Optimal plan for the current batch with model parameters fixed.

    Builds the joint cost from the fixed embeddings and ground-truth
    labels, masks non-neighbor pairs (when a neighbor set is given) and
    solves the unbalanced problem at (epsilon, lambda) from the config.
    """
    C = batch_joint_cost(batch, cfg)
    if neighbors is not None:
        C = neighborhood_mask(C, neighbors, batch.src_ids, batch.tgt_ids)
    m = batch.m
    return sinkhorn_unbalanced(
        C, make_uniform_measure(m), make_uniform_measure(m), _ot_params(cfg)
    )


def _onehot(labels: np.ndarray) -> np.ndarray:
    out = np.zeros((len(labels), N_CLASSES))
    out[np.arange(len(labels)), labels] = 1.0
    return out


def _coupled_terms(params, gamma, batch, cfg, want_grads):
    """Shared forward (and optional backward) pass for the plan-coupled loss."""
    theta_s, theta_t = cfg.resolved_theta_s, cfg.theta_t
    m = batch.m
    Xs, Xt = batch.src_embeddings, batch.tgt_embeddings
    Zs, Zt = encode(params, Xs), encode(params, Xt)
    Ls, Lt = _logits(params, Zs), _logits(params, Zt)
    log_ps, log_pt = _log_softmax(Ls), _log_softmax(Lt)
    Ys, Yt = _onehot(batch.src_labels), _onehot(batch.tgt_labels)

    r = gamma.sum(axis=1)
    s = gamma.sum(axis=0)
    gYt = gamma @ Yt

    ed_term = 0.0
    lc_term = 0.0
    if cfg.use_ed:
        D = squared_l2_cost(Zs, Zt)
        ed_term = cfg.alpha * float((gamma * D).sum())
    if cfg.use_lc:
        lc_term = cfg.beta * float(-(gYt * log_ps).sum())

    source_ce = float(-(Ys * log_ps).sum() / m)
    target_ce = float(-(Yt * log_pt).sum() / m)
    transport = ed_term + lc_term
    total = theta_s * source_ce + theta_t * target_ce + transport

    breakdown = LossBreakdown(source_ce, target_ce, transport, 0.0, 0.0, total)
    if not want_grads:
        return None, breakdown

    ps, pt = np.exp(log_ps), np.exp(log_pt)
    dLs = (theta_s / m) * (ps - Ys)
    dLt = (theta_t / m) * (pt - Yt)
    if cfg.use_lc:
        dLs = dLs + cfg.beta * (r[:, None] * ps - gYt)
    dZs = dLs @ params.w_clf
    dZt = dLt @ params.w_clf
    if cfg.use_ed:
        dZs = dZs + 2.0 * cfg.alpha * (r[:, None] * Zs - gamma @ Zt)
        dZt = dZt + 2.0 * cfg.alpha * (s[:, None] * Zt - gamma.T @ Zs)
    grads = Gradients(
        w_enc=dZs.T @ Xs + dZt.T @ Xt,
        b_enc=dZs.sum(axis=0) + dZt.sum(axis=0),
        w_clf=dLs.T @ Zs + dLt.T @ Zt,
        b_clf=dLs.sum(axis=0) + dLt.sum(axis=0),
    )
    return grads, breakdown


def model_step(
    params: ModelParams, plan: TransportPlan, batch: BatchPair, cfg: TrainConfig
):
    """Analytic gradients and loss terms with the transport plan fixed.

    The pairwise distance here is taken in the learned representation
    space, and the label term is the cross-entropy of source predictions
    against target labels; the plan is treated as a constant.
    """
    gamma = plan.matrix if isinstance(plan, TransportPlan) else np.asarray(plan)
    if gamma.shape != (batch.m, batch.m):
        raise ShapeError(f"plan shape {gamma.shape} != batch size {batch.m}")
    grads, breakdown = _coupled_terms(params, gamma, batch, cfg, want_grads=True)
    if not np.isfinite(breakdown.total):
        raise NumericalError("non-finite training loss", breakdown=breakdown)
    return grads, breakdown


def total_loss(
    batch: BatchPair, plan: TransportPlan, params: ModelParams, cfg: TrainConfig
) -> LossBreakdown:
    """Every term of the full objective, including the plan's entropy and
    KL marginal-relaxation penalties."""
    gamma = plan.matrix if isinstance(plan, TransportPlan) else np.asarray(plan)
    _, bd = _coupled_terms(params, gamma, batch, cfg, want_grads=False)
    m = batch.m
    uniform = make_uniform_measure(m)
    entropy = cfg.epsilon * float(_xlogx(gamma).sum())
    kl = cfg.lam * (
        generalized_kl(gamma.sum(axis=1), uniform)
        + generalized_kl(gamma.sum(axis=0), uniform)
    )
    total = bd.total + entropy + kl
    if not np.isfinite(total):
        raise NumericalError(
            "non-finite training loss",
            breakdown=LossBreakdown(
                bd.source_ce, bd.target_ce, bd.ot_transport, entropy, kl, total
            ),
        )
    return LossBreakdown(
        bd.source_ce, bd.target_ce, bd.ot_transport, entropy, kl, total
    )


def mixed_loss(batch: BatchPair, params: ModelParams, cfg: TrainConfig):
    """Source and target cross-entropies only (no OT terms), with gradients."""
    theta_s, theta_t = cfg.resolved_theta_s, cfg.theta_t
    gs, src_ce = _single_domain_grads(
        params, batch.src_embeddings, batch.src_labels, theta_s, batch.m
    )
    gt, tgt_ce = _single_domain_grads(
        params, batch.tgt_embeddings, batch.tgt_labels, theta_t, batch.m
    )
    grads = Gradients(
        *(a + b for (_, a), (_, b) in zip(gs.fields(), gt.fields()))
    )
    bd = LossBreakdown(
        src_ce, tgt_ce, 0.0, 0.0, 0.0, theta_s * src_ce + theta_t * tgt_ce
    )
    if not np.isfinite(bd.total):
        raise NumericalError("non-finite training loss", breakdown=bd)
    return grads, bd


def _single_domain_grads(params, X, y, weight, m):
    """weight * mean cross-entropy over one domain half."""
    Z = encode(params, X)
    L = _logits(params, Z)
    log_p = _log_softmax(L)
    Y = _onehot(y)
    ce = float(-(Y * log_p).sum() / len(y))
    dL = (weight / m) * (np.exp(log_p) - Y)
    dZ = dL @ params.w_clf
    grads = Gradients(
        w_enc=dZ.T @ X,
        b_enc=dZ.sum(axis=0),
        w_clf=dL.T @ Z,
        b_clf=dL.sum(axis=0),
    )
    return grads, ce


class AdamOptimizer:
    """Adaptive-moment first-order optimizer over ModelParams."""

    def __init__(self, params: ModelParams, lr: float, beta1=0.9, beta2=0.999, eps=1e-8):
        self.lr = lr
        self.beta1 = beta1
        self.beta2 = beta2
        self.eps = eps
        self.t = 0
        self.m = {name: np.zeros_like(arr) for name, arr in params.fields()}
        self.v = {name: np.zeros_like(arr) for name, arr in params.fields()}

    def step(self, params: ModelParams, grads: Gradients) -> None:
        self.t += 1
        b1, b2 = self.beta1, self.beta2
        for name, g in grads.fields():
            self.m[name] = b1 * self.m[name] + (1 - b1) * g
            self.v[name] = b2 * self.v[name] + (1 - b2) * g * g
            mh = self.m[name] / (1 - b1**self.t)
            vh = self.v[name] / (1 - b2**self.t)
            arr = getattr(params, name)
            arr -= self.lr * mh / (np.sqrt(vh) + self.eps)


@dataclass
class TrainResult:
    params: ModelParams
    history: list
    best_epoch: int
    best_val_f1: float
    final_params: ModelParams
    masked_column_warnings: int = 0
    preselected_ids: np.ndarray | None = None


def _epoch_source_batches(rng, pool, m):
    """Shuffled passes over the source pool, whole batches only."""
    perm = rng.permutation(pool)
    n_batches = max(1, len(pool) // m)
    m_eff = min(m, len(pool))
    return [perm[i * m_eff : (i + 1) * m_eff] for i in range(n_batches)]


def _subset(dataset: Dataset, rows) -> tuple:
    return (
        dataset.embeddings[rows],
        dataset.labels[rows],
        dataset.ids[rows],
    )


def train(
    cfg: TrainConfig,
    source: Dataset | None,
    target_train: Dataset,
    target_val: Dataset,
) -> TrainResult:
    """Run one training mode (variant or baseline) to completion.

    Model selection keeps the parameters from the epoch with the best
    validation hate-F1 (earliest epoch on ties). Deterministic given
    ``cfg.seed``.
    """
    from .metrics import f1_hate  # local import to avoid a module cycle

    if source is None and cfg.variant != "target_ft":
        raise ConfigError(f"variant {cfg.variant!r} requires a source dataset")
    dim = target_train.dim
    if source is not None and source.dim != dim:
        raise ShapeError("source and target dims differ")
    if target_val.dim != dim:
        raise ShapeError("target train and val dims differ")

    rng = np.random.default_rng(cfg.seed)
    params = init_params(dim, cfg.hidden_dim, rng)
    optimizer = AdamOptimizer(params, cfg.learning_rate)

    neighbor_set = None
    pool = np.arange(source.n) if source is not None else None
    preselected = None
    if cfg.is_ot_mode or cfg.uses_preselect:
        index = build_index(source)
        neighbor_set = compute_neighbor_sets(index, target_train, cfg.k)
        if cfg.uses_preselect:
            preselected = preselect_sources(neighbor_set)
            pool = np.flatnonzero(np.isin(source.ids, preselected))

    if cfg.variant == "seq_ft":
        phases = [("source_only", cfg.epochs), ("target_only", cfg.epochs)]
    elif cfg.variant == "target_ft":
        phases = [("target_only", cfg.epochs)]
    elif cfg.variant in ("mixed_ft", "knn_ft"):
        phases = [("mixed", cfg.epochs)]
    else:
        phases = [("ot", cfg.epochs)]

    history = []
    best = None  # (val_f1, epoch, params)
    masked_warnings = 0
    n_t = target_train.n
    epoch_no = 0

    for phase, n_epochs in phases:
        for _ in range(n_epochs):
            epoch_no += 1
            sums = np.zeros(6)
            n_batches = 0

            if phase in ("target_only", "source_only"):
                data = target_train if phase == "target_only" else source
                weight = cfg.theta_t if phase == "target_only" else 1.0
                perm = rng.permutation(data.n)
                for start in range(0, data.n, cfg.batch_size):
                    rows = perm[start : start + cfg.batch_size]
                    X, y, _ = _subset(data, rows)
                    grads, ce = _single_domain_grads(params, X, y, weight, len(rows))
                    optimizer.step(params, grads)
                    bd = LossBreakdown(
                        ce if phase == "source_only" else 0.0,
                        ce if phase == "target_only" else 0.0,
                        0.0,
                        0.0,
                        0.0,
                        weight * ce,
                    )
                    sums += np.asarray(bd.as_tuple())
                    n_batches += 1
            else:
                for src_rows in _epoch_source_batches(rng, pool, cfg.batch_size):
                    tgt_rows = rng.choice(n_t, size=len(src_rows), replace=True)
                    Xs, ys, sids = _subset(source, src_rows)
                    Xt, yt, tids = _subset(target_train, tgt_rows)
                    batch = BatchPair(Xs, ys, sids, Xt, yt, tids)
                    if phase == "ot":
                        member = neighbor_set.membership(sids, tids)
                        masked_warnings += int((~member.any(axis=0)).sum())
                        C = batch_joint_cost(batch, cfg)
                        C = neighborhood_mask(
                            C, neighbor_set, sids, tids, membership=member
                        )
                        plan = sinkhorn_unbalanced(
                            C,
                            make_uniform_measure(batch.m),
                            make_uniform_measure(batch.m),
                            _ot_params(cfg),
                        )
                        grads, _ = model_step(params, plan, batch, cfg)
                        bd = total_loss(batch, plan, params, cfg)
                    else:
                        grads, bd = mixed_loss(batch, params, cfg)
                    optimizer.step(params, grads)
                    sums += np.asarray(bd.as_tuple())
                    n_batches += 1

            preds = predict_labels(params, target_val.embeddings)
            val_f1 = f1_hate(preds, target_val.labels).f1_hate
            means = sums / max(n_batches, 1)
            history.append(
                {
                    "epoch": epoch_no,
                    "source_ce": means[0],
                    "target_ce": means[1],
                    "ot_transport": means[2],
                    "ot_entropy": means[3],
                    "ot_kl": means[4],
                    "total": means[5],
                    "val_f1": val_f1,
                    "phase": phase,
                }
            )
            selectable = cfg.variant != "seq_ft" or phase == "target_only"
            if selectable and (best is None or val_f1 > best[0]):
                best = (val_f1, epoch_no, params.copy())

    return TrainResult(
        params=best[2],
        history=history,
        best_epoch=best[1],
        best_val_f1=best[0],
        final_params=params,
        masked_column_warnings=masked_warnings,
        preselected_ids=preselected,
    )


@dataclass
class GradCheckReport:
    max_rel_error: float
    passed: bool
    per_field: dict


def grad_check(
    params: ModelParams,
    batch: BatchPair,
    cfg: TrainConfig,
    tol: float = 1e-4,
    gamma: np.ndarray | None = None,
    step: float = 1e-5,
) -> GradCheckReport:
    """Compare analytic model-step gradients with central differences.

    ``gamma`` defaults to an unmasked gamma-step solve on the batch.
    Relative error uses max(|analytic|, |numeric|, 1e-8) as denominator.
    """
    if gamma is None:
        gamma = gamma_step(batch, None, cfg).matrix
    gamma = np.asarray(gamma, dtype=np.float64)

    def loss_at(p: ModelParams) -> float:
        _, bd = _coupled_terms(p, gamma, batch, cfg, want_grads=False)
        return bd.total

    analytic, _ = _coupled_terms(params, gamma, batch, cfg, want_grads=True)
    worst = 0.0
    per_field = {}
    work = params.copy()
    for name, arr in work.fields():
        ga = dict(analytic.fields())[name]
        flat = arr.ravel()
        g_num = np.zeros_like(flat)
        for i in range(flat.size):
            orig = flat[i]
            flat[i] = orig + step
            up = loss_at(work)
            flat[i] = orig - step
            down = loss_at(work)
            flat[i] = orig
            g_num[i] = (up - down) / (2 * step)
        g_num = g_num.reshape(arr.shape)
        denom = np.maximum(np.maximum(np.abs(ga), np.abs(g_num)), 1e-8)
        rel = float(np.max(np.abs(ga - g_num) / denom))
        per_field[name] = rel
        worst = max(worst, rel)
    return GradCheckReport(worst, worst < tol, per_field)


def save_model(params: ModelParams, path) -> None:
    """Serialize model parameters (magic OTNM, little-endian, float64)."""
    with open(path, "wb") as fh:
        fh.write(
            _MODEL_HEADER.pack(
                MODEL_MAGIC,
                MODEL_VERSION,
                params.dim,
                params.hidden_dim,
                params.w_clf.shape[0],
            )
        )
        for _, arr in params.fields():
            fh.write(arr.astype("<f8").tobytes())


def load_model(path) -> ModelParams:
    with open(path, "rb") as fh:
        raw = fh.read()
    if len(raw) < _MODEL_HEADER.size:
        raise FormatError(f"{path}: truncated model header")
    magic, version, dim, hidden, classes = _MODEL_HEADER.unpack_from(raw, 0)
    if magic != MODEL_MAGIC:
        raise FormatError(f"{path}: bad magic {magic!r}")
    if version != MODEL_VERSION:
        raise FormatError(f"{path}: unsupported model version {version}")
    sizes = (hidden * dim, hidden, classes * hidden, classes)
    shapes = ((hidden, dim), (hidden,), (classes, hidden), (classes,))
    need = _MODEL_HEADER.size + 8 * sum(sizes)
    if len(raw) != need:
        raise FormatError(f"{path}: expected {need} bytes, found {len(raw)}")
    arrays = []
    off = _MODEL_HEADER.size
    for size, shape in zip(sizes, shapes):
        arrays.append(
            np.frombuffer(raw, dtype="<f8", count=size, offset=off).reshape(shape).copy()
        )
        off += 8 * size
    return ModelParams(*arrays)


HISTORY_COLUMNS = (
    "epoch",
    "source_ce",
    "target_ce",
    "ot_transport",
    "ot_entropy",
    "ot_kl",
    "total",
    "val_f1",
)


def write_history(path, history) -> None:
    """Training history to CSV: epoch, loss terms, validation F1."""
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(HISTORY_COLUMNS)
        for row in history:
            writer.writerow([repr(row[c]) if isinstance(row[c], float) else row[c] for c in HISTORY_COLUMNS])
