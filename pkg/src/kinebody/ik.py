"""Learned inverse kinematics.

A dense network maps root-relative keypoints of one part (body or one hand)
to per-joint 6D rotations, shape coefficients and a uniform scale.  Training
minimizes the weighted sum of five L2 terms (scale, shape, rotation
matrices, posed keypoints, rest-pose keypoints) with hand-written
backpropagation through the network, the 6D conversion and forward
kinematics.
"""

import logging
import math
from dataclasses import dataclass, field

import numpy as np

from .assets import (
    LEFT_HAND_JOINTS,
    LEFT_WRIST,
    NUM_BETAS,
    NUM_BODY_JOINTS,
    NUM_JOINTS,
    RIGHT_HAND_JOINTS,
    RIGHT_WRIST,
    read_kba,
    write_kba,
)
from .body_model import fk_batch, fk_batch_backward
from .errors import DimensionMismatchError, DivergenceError, InvalidArgumentError, SchemaError
from .rotations import _rot6d_forward, matrix_to_rot6d, rot6d_backward

log = logging.getLogger(__name__)


# --------------------------------------------------------------------------
# parts


@dataclass(frozen=True)
class IKPart:
    """A sub-skeleton: ``joints[0]`` is its root, rotations are predicted for
    ``rotation_joints`` (a subset of ``joints``); all other rotations stay
    identity."""

    name: str
    joints: tuple
    rotation_joints: tuple

    def sub_parents(self, parents):
        pos = {j: i for i, j in enumerate(self.joints)}
        return np.array([pos.get(int(parents[j]), -1) if i else -1 for i, j in enumerate(self.joints)], dtype=np.int64)

    @property
    def rotation_slots(self):
        pos = {j: i for i, j in enumerate(self.joints)}
        return np.array([pos[j] for j in self.rotation_joints], dtype=np.int64)

    @property
    def n_in(self):
        return 3 * len(self.joints)

    @property
    def n_out(self):
        return 6 * len(self.rotation_joints) + NUM_BETAS + 1


PARTS = {
    "body": IKPart("body", tuple(range(NUM_BODY_JOINTS)), tuple(range(NUM_BODY_JOINTS))),
    "left_hand": IKPart("left_hand", (LEFT_WRIST, *LEFT_HAND_JOINTS), tuple(LEFT_HAND_JOINTS)),
    "right_hand": IKPart("right_hand", (RIGHT_WRIST, *RIGHT_HAND_JOINTS), tuple(RIGHT_HAND_JOINTS)),
}


class PartModel:
    """Rig quantities restricted to one part, cached for training."""

    def __init__(self, rig, part):
        self.part = part
        ids = np.array(part.joints)
        self.parents = part.sub_parents(rig.parent_index)
        self.order = _order(self.parents)
        self.rest = rig.rest_joint_positions[ids]
        self.joint_basis = rig.joint_shape_basis[:, ids]  # 16 x P x 3
        self.slots = part.rotation_slots
        child = np.flatnonzero(self.parents >= 0)
        self.mean_bone_length = float(np.mean(np.linalg.norm(self.rest[child] - self.rest[self.parents[child]], axis=1)))

    def rest_joints(self, beta):
        return self.rest + np.tensordot(beta, self.joint_basis, axes=(-1, 0))

    def local_rotations(self, rot):
        """Scatter predicted rotations (B, R, 3, 3) into all part slots."""
        B = rot.shape[0]
        L = np.broadcast_to(np.eye(3), (B, len(self.parents), 3, 3)).copy()
        L[:, self.slots] = rot
        return L

    def posed_keypoints(self, rot, beta, alpha):
        """Root-relative posed keypoints scaled by alpha, plus FK intermediates."""
        rest = self.rest_joints(beta)
        L = self.local_rotations(rot)
        G, P = fk_batch(self.parents, self.order, L, rest)
        chi = alpha[:, None, None] * (P - P[:, :1])
        return chi, (rest, L, G, P)

    def reference_keypoints(self, beta, alpha):
        rest = self.rest_joints(beta)
        return alpha[:, None, None] * (rest - rest[:, :1])


def _order(parents):
    children = [[] for _ in parents]
    for j, p in enumerate(parents):
        if p >= 0:
            children[p].append(j)
    order, stack = [], [int(np.flatnonzero(parents < 0)[0])]
    while stack:
        j = stack.pop()
        order.append(j)
        stack.extend(reversed(children[j]))
    return np.array(order, dtype=np.int64)


# --------------------------------------------------------------------------
# config and samples


@dataclass
class IKTrainConfig:
    lambda_alpha: float = 1.0
    lambda_beta: float = 0.01
    lambda_theta: float = 0.1
    lambda_chi: float = 100.0
    lambda_chibar: float = 10.0
    learning_rate: float = 1e-3
    batch_size: int = 128
    epochs: int = 30
    seed: int = 0
    optimizer: str = "momentum"  # "momentum" or "adam"
    momentum: float = 0.9
    grad_clip: float = 1.0  # global gradient-norm cap, 0 disables
    lr_decay: str = "cosine"  # "cosine" or "none"
    hidden_layers: int = 6
    hidden_width: int = None  # None: 1024 for the body, 512 for a hand
    part: str = "body"
    noise_std: float = 0.0  # meters, added to input keypoints
    scale_range: tuple = (1.0, 1.0)  # global scale augmentation, uniform
    shape_std: float = 1.0
    body_limit: float = math.pi / 2

    def __post_init__(self):
        for name in ("lambda_alpha", "lambda_beta", "lambda_theta", "lambda_chi", "lambda_chibar"):
            if getattr(self, name) < 0:
                raise InvalidArgumentError(f"{name} must be nonnegative")
        if self.part not in PARTS:
            raise InvalidArgumentError(f"part must be one of {sorted(PARTS)}")
        if self.optimizer not in ("momentum", "adam"):
            raise InvalidArgumentError("optimizer must be 'momentum' or 'adam'")
        if self.grad_clip < 0 or self.momentum < 0 or self.learning_rate <= 0:
            raise InvalidArgumentError("grad_clip and momentum must be nonnegative, learning_rate positive")
        if self.hidden_width is None:
            self.hidden_width = 1024 if self.part == "body" else 512
        if self.batch_size < 1 or self.epochs < 0 or self.hidden_layers < 0 or self.hidden_width < 1:
            raise InvalidArgumentError("batch_size, hidden_width must be positive; epochs, hidden_layers nonnegative")


@dataclass
class IKSample:
    """Batched training samples for one part (leading axis = sample)."""

    inputs: np.ndarray  # B x P x 3, root-relative (possibly noisy)
    rotations: np.ndarray  # B x R x 3 x 3
    beta: np.ndarray  # B x 16
    alpha: np.ndarray  # B
    chi: np.ndarray  # B x P x 3
    chi_bar: np.ndarray  # B x P x 3

    def __len__(self):
        return self.inputs.shape[0]

    def subset(self, idx):
        return IKSample(*(getattr(self, f)[idx] for f in ("inputs", "rotations", "beta", "alpha", "chi", "chi_bar")))


def _euler_xyz(angles):
    a = np.asarray(angles)
    cx, sx = np.cos(a[..., 0]), np.sin(a[..., 0])
    cy, sy = np.cos(a[..., 1]), np.sin(a[..., 1])
    cz, sz = np.cos(a[..., 2]), np.sin(a[..., 2])
    one, zero = np.ones_like(cx), np.zeros_like(cx)
    Rx = np.stack([one, zero, zero, zero, cx, -sx, zero, sx, cx], -1).reshape(a.shape[:-1] + (3, 3))
    Ry = np.stack([cy, zero, sy, zero, one, zero, -sy, zero, cy], -1).reshape(a.shape[:-1] + (3, 3))
    Rz = np.stack([cz, -sz, zero, sz, cz, zero, zero, zero, one], -1).reshape(a.shape[:-1] + (3, 3))
    return Rx @ Ry @ Rz


def joint_limits(part, body_limit=math.pi / 2):
    """Per-joint Euler (x, y, z) bounds for pose sampling, shape (R, 3, 2).

    Body joints: +-body_limit per axis.  Fingers (left hand, pointing +x,
    palm down): flexion about z with small abduction about y on the first
    phalanx; thumbs get a looser box.  The right hand mirrors y and z.
    """
    n = len(part.rotation_joints)
    if part.name == "body":
        lim = np.empty((n, 3, 2))
        lim[..., 0], lim[..., 1] = -body_limit, body_limit
        return lim
    lim = np.zeros((n, 3, 2))
    for f in range(5):
        for k in range(3):
            i = 3 * f + k
            if f == 4:  # thumb
                lim[i] = [[-0.5, 0.5], [-0.5, 0.5], [-0.8, 0.2]]
            elif k == 0:
                lim[i] = [[0.0, 0.0], [-0.3, 0.3], [-math.pi / 2, 0.2]]
            else:
                lim[i] = [[0.0, 0.0], [0.0, 0.0], [-math.pi / 2, 0.0]]
    if part.name == "right_hand":
        lim[:, 1:] = -lim[:, 1:, ::-1]
    return lim


def generate_ik_training_set(rig, n, seed, cfg=None):
    """Sample poses inside the joint limits and run FK for the targets."""
    if n <= 0:
        raise InvalidArgumentError("n must be positive")
    cfg = cfg or IKTrainConfig()
    part = PARTS[cfg.part]
    model = PartModel(rig, part)
    rng = np.random.default_rng(np.random.SeedSequence(seed))
    lim = joint_limits(part, cfg.body_limit)
    u = rng.random((n, len(part.rotation_joints), 3))
    rot = _euler_xyz(lim[..., 0] + u * (lim[..., 1] - lim[..., 0]))
    beta = cfg.shape_std * rng.standard_normal((n, NUM_BETAS))
    lo, hi = cfg.scale_range
    alpha = lo + (hi - lo) * rng.random(n) if hi > lo else np.full(n, float(lo))
    chi, _ = model.posed_keypoints(rot, beta, alpha)
    chi_bar = model.reference_keypoints(beta, alpha)
    inputs = chi.copy()
    if cfg.noise_std > 0:
        inputs = inputs + cfg.noise_std * rng.standard_normal(inputs.shape)
        inputs -= inputs[:, :1]
    return IKSample(inputs=inputs, rotations=rot, beta=beta, alpha=alpha, chi=chi, chi_bar=chi_bar)


# --------------------------------------------------------------------------
# network


@dataclass
class IKNetParams:
    weights: list
    biases: list
    activations: list  # per layer: "silu" or "linear"
    part: str = "body"
    input_mean: np.ndarray = None  # fixed input standardization
    input_std: np.ndarray = None

    def __post_init__(self):
        if not (len(self.weights) == len(self.biases) == len(self.activations)):
            raise DimensionMismatchError("weights, biases and activations must have equal length")
        for k, (W, b) in enumerate(zip(self.weights, self.biases)):
            if W.shape[1] != b.shape[0]:
                raise DimensionMismatchError(f"layer {k}: weight {W.shape} vs bias {b.shape}")
            if k and self.weights[k - 1].shape[1] != W.shape[0]:
                raise DimensionMismatchError(f"layer {k}: input width {W.shape[0]} != previous output {self.weights[k - 1].shape[1]}")
        p = PARTS[self.part]
        if self.input_mean is None:
            self.input_mean = np.zeros(p.n_in)
        if self.input_std is None:
            self.input_std = np.ones(p.n_in)
        if self.weights[0].shape[0] != p.n_in or self.weights[-1].shape[1] != p.n_out:
            raise DimensionMismatchError(f"{self.part}: expected input {p.n_in} and output {p.n_out}")

    def copy(self):
        return IKNetParams([w.copy() for w in self.weights], [b.copy() for b in self.biases], list(self.activations),
                           self.part, self.input_mean.copy(), self.input_std.copy())

    def flat(self):
        return np.concatenate([a.ravel() for pair in zip(self.weights, self.biases) for a in pair])


def init_iknet(part="body", hidden_layers=6, hidden_width=1024, seed=0, inputs=None):
    """Random dense layers; the last layer starts at identity rotations,
    zero shape and unit scale.  ``inputs`` (B x P x 3) sets the input
    standardization."""
    p = PARTS[part]
    rng = np.random.default_rng(np.random.SeedSequence([seed, 0x1C]))
    dims = [p.n_in] + [hidden_width] * hidden_layers + [p.n_out]
    weights, biases, acts = [], [], []
    for k, (a, b) in enumerate(zip(dims, dims[1:])):
        last = k == len(dims) - 2
        std = 1e-3 if last else math.sqrt(2.0 / a)
        weights.append(std * rng.standard_normal((a, b)))
        biases.append(np.zeros(b))
        acts.append("linear" if last else "silu")
    nrot = len(p.rotation_joints)
    biases[-1][: 6 * nrot] = np.tile([1.0, 0.0, 0.0, 0.0, 1.0, 0.0], nrot)
    biases[-1][-1] = 1.0
    mean, std = np.zeros(p.n_in), np.ones(p.n_in)
    if inputs is not None:
        x = np.asarray(inputs, dtype=np.float64).reshape(len(inputs), -1)
        mean = x.mean(axis=0)
        std = x.std(axis=0)
        std[std < 1e-6] = 1.0
    return IKNetParams(weights, biases, acts, part, mean, std)


def _sigmoid(x):
    return 0.5 * (1.0 + np.tanh(0.5 * x))


def _mlp_forward(params, x):
    cache = []
    h = (x - params.input_mean) / params.input_std
    for W, b, act in zip(params.weights, params.biases, params.activations):
        z = h @ W + b
        cache.append((h, z))
        h = z * _sigmoid(z) if act == "silu" else z
    return h, cache


def _mlp_backward(params, cache, dout):
    dW, db = [], []
    g = dout
    for (h, z), W, act in zip(reversed(cache), reversed(params.weights), reversed(params.activations)):
        if act == "silu":
            s = _sigmoid(z)
            g = g * (s * (1.0 + z * (1.0 - s)))
        dW.append(h.T @ g)
        db.append(g.sum(axis=0))
        g = g @ W.T
    return dW[::-1], db[::-1]


def _split_output(out, part):
    nrot = len(part.rotation_joints)
    r6 = out[:, : 6 * nrot].reshape(-1, nrot, 6)
    beta = out[:, 6 * nrot: 6 * nrot + NUM_BETAS]
    alpha = out[:, -1]
    return r6, beta, alpha


def iknet_forward(params, keypoints):
    """Rotations (as matrices), shape and scale for one or many inputs.

    ``keypoints`` is (P, 3), (P*3,), or batched (B, P, 3) / (B, P*3).
    """
    part = PARTS[params.part]
    x = np.asarray(keypoints, dtype=np.float64)
    single = x.ndim == 1 or (x.ndim == 2 and x.shape == (len(part.joints), 3))
    x = x.reshape(1 if single else x.shape[0], -1)
    if x.shape[1] != params.weights[0].shape[0]:
        raise DimensionMismatchError(f"input length {x.shape[1]} != {params.weights[0].shape[0]}")
    out, _ = _mlp_forward(params, x)
    r6, beta, alpha = _split_output(out, part)
    R, _ = _rot6d_forward(r6, check=True)
    if single:
        return R[0], beta[0], float(alpha[0])
    return R, beta, alpha


# --------------------------------------------------------------------------
# loss


TERMS = ("alpha", "beta", "theta", "chi", "chibar")


def ik_loss(pred, sample, model, cfg):
    """Weighted L2 loss, averaged over the batch.

    ``pred`` is ``(R, beta, alpha)`` batched; ``model`` a :class:`PartModel`
    (a rig is accepted and wrapped).  Returns ``(total, {term: value})`` with
    unweighted per-term values.
    """
    total, terms, _ = _loss_and_grads(pred, sample, _as_model(model, cfg), cfg, need_grad=False)
    return total, terms


def _as_model(model, cfg):
    if isinstance(model, PartModel):
        return model
    return PartModel(model, PARTS[cfg.part])


def _loss_and_grads(pred, sample, model, cfg, need_grad=True):
    R, beta, alpha = pred
    R = np.asarray(R, dtype=np.float64)
    if R.ndim == 3:
        R, beta, alpha = R[None], np.atleast_2d(beta), np.atleast_1d(alpha)
        sample = IKSample(*(np.asarray(v)[None] for v in (sample.inputs, sample.rotations, sample.beta,
                                                             sample.alpha, sample.chi, sample.chi_bar)))
    alpha = np.asarray(alpha, dtype=np.float64)
    B = R.shape[0]
    if R.shape != sample.rotations.shape or beta.shape != sample.beta.shape or alpha.shape != sample.alpha.shape:
        raise DimensionMismatchError("prediction and sample shapes differ")
    chi, (rest, L, G, P) = model.posed_keypoints(R, beta, alpha)
    rel_ref = rest - rest[:, :1]
    chibar = alpha[:, None, None] * rel_ref

    r_alpha = alpha - sample.alpha
    r_beta = beta - sample.beta
    r_theta = R - sample.rotations
    r_chi = chi - sample.chi
    r_chibar = chibar - sample.chi_bar
    terms = {
        "alpha": float(np.sum(r_alpha**2) / B),
        "beta": float(np.sum(r_beta**2) / B),
        "theta": float(np.sum(r_theta**2) / B),
        "chi": float(np.sum(r_chi**2) / B),
        "chibar": float(np.sum(r_chibar**2) / B),
    }
    lam = {t: getattr(cfg, f"lambda_{t}") for t in TERMS}
    total = sum(lam[t] * terms[t] for t in TERMS)
    if not need_grad:
        return total, terms, None

    s = 2.0 / B
    d_alpha = s * lam["alpha"] * r_alpha
    d_beta = s * lam["beta"] * r_beta
    d_R = s * lam["theta"] * r_theta
    g_chi = s * lam["chi"] * r_chi
    g_chibar = s * lam["chibar"] * r_chibar

    rel = P - P[:, :1]
    d_alpha = d_alpha + np.sum(g_chi * rel, axis=(1, 2)) + np.sum(g_chibar * rel_ref, axis=(1, 2))
    dP = alpha[:, None, None] * g_chi
    dP[:, 0] -= dP.sum(axis=1)
    d_rest_ref = alpha[:, None, None] * g_chibar
    d_rest_ref[:, 0] -= d_rest_ref.sum(axis=1)
    d_local, d_rest = fk_batch_backward(model.parents, model.order, L, rest, G, dP)
    d_rest = d_rest + d_rest_ref
    d_R = d_R + d_local[:, model.slots]
    d_beta = d_beta + np.einsum("kpc,bpc->bk", model.joint_basis, d_rest)
    return total, terms, (d_R, d_beta, d_alpha)


def loss_and_param_grads(params, sample, model, cfg):
    """Loss on network outputs and its gradient w.r.t. every weight and bias."""
    part = PARTS[params.part]
    x = sample.inputs.reshape(len(sample), -1)
    out, cache = _mlp_forward(params, x)
    r6, beta, alpha = _split_output(out, part)
    R, _ = _rot6d_forward(r6, check=False)
    total, terms, (d_R, d_beta, d_alpha) = _loss_and_grads((R, beta, alpha), sample, model, cfg)
    d_r6 = rot6d_backward(r6, d_R)
    dout = np.concatenate([d_r6.reshape(len(sample), -1), d_beta, d_alpha[:, None]], axis=1)
    dW, db = _mlp_backward(params, cache, dout)
    return total, terms, dW, db


# --------------------------------------------------------------------------
# training


@dataclass
class TrainLog:
    epoch_loss: list = field(default_factory=list)
    epoch_terms: list = field(default_factory=list)
    learning_rates: list = field(default_factory=list)

    def as_dict(self):
        return {"epoch_loss": self.epoch_loss, "epoch_terms": self.epoch_terms, "learning_rates": self.learning_rates}


def _lr_at(cfg, epoch):
    if cfg.lr_decay == "cosine" and cfg.epochs > 1:
        return cfg.learning_rate * 0.5 * (1.0 + math.cos(math.pi * epoch / cfg.epochs))
    return cfg.learning_rate


def train_iknet(rig, dataset, cfg, params=None, callback=None):
    """Mini-batch training with fixed-order shuffles; fully deterministic.

    Returns ``(params, TrainLog)``.  Raises :class:`DivergenceError` when the
    loss stops being finite.
    """
    if len(dataset) == 0:
        raise InvalidArgumentError("dataset is empty")
    part = PARTS[cfg.part]
    model = PartModel(rig, part)
    if params is None:
        params = init_iknet(cfg.part, cfg.hidden_layers, cfg.hidden_width, cfg.seed, dataset.inputs)
    params = params.copy()
    rng = np.random.default_rng(np.random.SeedSequence([cfg.seed, 0x7A]))
    state = [np.zeros_like(a) for a in params.weights + params.biases]
    state2 = [np.zeros_like(a) for a in params.weights + params.biases]
    step = 0
    log_ = TrainLog()
    n = len(dataset)
    for epoch in range(cfg.epochs):
        lr = _lr_at(cfg, epoch)
        perm = rng.permutation(n)
        acc, acc_terms, seen = 0.0, dict.fromkeys(TERMS, 0.0), 0
        for start in range(0, n, cfg.batch_size):
            idx = perm[start:start + cfg.batch_size]
            batch = dataset.subset(idx)
            total, terms, dW, db = loss_and_param_grads(params, batch, model, cfg)
            if not math.isfinite(total):
                raise DivergenceError(f"loss became {total} at epoch {epoch}, step {step}; last lr {lr:g}")
            grads = dW + db
            if cfg.grad_clip > 0:
                norm = math.sqrt(sum(float(np.sum(g * g)) for g in grads))
                if norm > cfg.grad_clip:
                    grads = [g * (cfg.grad_clip / norm) for g in grads]
            tensors = params.weights + params.biases
            step += 1
            for k, (p, g) in enumerate(zip(tensors, grads)):
                if cfg.optimizer == "adam":
                    state[k] *= 0.9
                    state[k] += 0.1 * g
                    state2[k] *= 0.999
                    state2[k] += 0.001 * g * g
                    mhat = state[k] / (1.0 - 0.9**step)
                    vhat = state2[k] / (1.0 - 0.999**step)
                    p -= lr * mhat / (np.sqrt(vhat) + 1e-8)
                else:
                    state[k] *= cfg.momentum
                    state[k] += g
                    p -= lr * state[k]
            acc += total * len(idx)
            for t in TERMS:
                acc_terms[t] += terms[t] * len(idx)
            seen += len(idx)
        epoch_loss = acc / seen
        log_.epoch_loss.append(epoch_loss)
        log_.epoch_terms.append({t: acc_terms[t] / seen for t in TERMS})
        log_.learning_rates.append(lr)
        log.info("epoch %d loss %.6g lr %.3g", epoch, epoch_loss, lr)
        if callback is not None:
            callback(epoch, params, log_)
    return params, log_


def evaluate_keypoint_error(params, rig, dataset):
    """Mean per-joint distance between predicted posed keypoints and targets."""
    part = PARTS[params.part]
    model = PartModel(rig, part)
    R, beta, alpha = iknet_forward(params, dataset.inputs.reshape(len(dataset), -1))
    chi, _ = model.posed_keypoints(R, beta, alpha)
    return float(np.mean(np.linalg.norm(chi - dataset.chi, axis=-1)))


# --------------------------------------------------------------------------
# persistence


_ACT_CODES = {"linear": 0, "silu": 1}


def save_params(params, path):
    arrays = {}
    for k, (W, b) in enumerate(zip(params.weights, params.biases)):
        arrays[f"W{k}"] = W
        arrays[f"b{k}"] = b
    arrays["activations"] = np.array([_ACT_CODES[a] for a in params.activations], dtype=np.uint32)
    arrays["part"] = np.array([list(PARTS).index(params.part)], dtype=np.uint32)
    arrays["input_mean"] = params.input_mean
    arrays["input_std"] = params.input_std
    write_kba(path, "IKNetParams", arrays)


def load_params(path):
    kind, arrays = read_kba(path)
    if kind != "IKNetParams":
        raise SchemaError(f"{path}: expected IKNetParams, found {kind!r}")
    try:
        acts_code = arrays["activations"]
        part = list(PARTS)[int(arrays["part"][0])]
        n = len(acts_code)
        weights = [arrays[f"W{k}"] for k in range(n)]
        biases = [arrays[f"b{k}"] for k in range(n)]
    except (KeyError, IndexError) as e:
        raise SchemaError(f"{path}: malformed IKNetParams ({e})") from e
    names = {v: k for k, v in _ACT_CODES.items()}
    return IKNetParams(weights, biases, [names[int(c)] for c in acts_code], part,
                       arrays.get("input_mean"), arrays.get("input_std"))


def full_rotations(params, R):
    """Place a part's predicted rotations into a 52-joint identity pose."""
    part = PARTS[params.part]
    full = np.broadcast_to(np.eye(3), (NUM_JOINTS, 3, 3)).copy()
    full[list(part.rotation_joints)] = R
    return full


__all__ = [
    "IKNetParams", "IKPart", "IKSample", "IKTrainConfig", "PARTS", "PartModel", "TrainLog",
    "evaluate_keypoint_error", "full_rotations", "generate_ik_training_set", "ik_loss", "iknet_forward",
    "init_iknet", "joint_limits", "load_params", "loss_and_param_grads", "matrix_to_rot6d", "save_params",
    "train_iknet",
]
