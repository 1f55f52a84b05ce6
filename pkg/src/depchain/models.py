"""Three classifiers over token representations: LSTM, CNN, tree-LSTM.

Each model maps an encoded input to 3-class logits (PAST, ONGOING, FUTURE),
exposes a backward pass that accumulates parameter gradients and returns the
gradient with respect to the input embeddings, and is deterministic in eval
mode. Dropout touches only the penultimate vector (final hidden state or
pooled feature vector).
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .corpus import TemporalStatus
from .nncore import ParamSet, dropout, grad_check, softmax, softmax_xent, uniform_init

__all__ = [
    "N_CLASSES",
    "FILTER_WIDTH",
    "EncodedInput",
    "LstmClassifier",
    "CnnClassifier",
    "TreeLstmClassifier",
    "MODEL_TYPES",
    "build_model",
    "restore_model",
    "model_loss",
    "classify",
    "random_tree_children",
    "random_instance",
    "gradcheck_model",
]

N_CLASSES = 3
FILTER_WIDTH = 5


@dataclass(frozen=True)
class EncodedInput:
    """Model-ready view of one mention.

    Sequence models read forms/X only. The tree model additionally needs the
    children lists (positions, not token ids), the root position, and the
    target position for the alternative readout.
    """

    forms: tuple[str, ...]
    X: np.ndarray  # (T, dim) embedding rows, float64
    rows: np.ndarray  # (T,) embedding table row per position, -1 for unk
    children: tuple[tuple[int, ...], ...] | None = None
    root_pos: int = 0
    target_pos: int = 0

    def __len__(self) -> int:
        return len(self.forms)


def _sigmoid(x: np.ndarray) -> np.ndarray:
    out = np.empty_like(x)
    pos = x >= 0
    out[pos] = 1.0 / (1.0 + np.exp(-x[pos]))
    ez = np.exp(x[~pos])
    out[~pos] = ez / (1.0 + ez)
    return out


class LstmClassifier:
    """Single-layer left-to-right LSTM; softmax over the final hidden state."""

    model_type = "lstm"

    GATES = ("i", "f", "o", "g")

    def __init__(self, params: ParamSet, dim: int, hidden: int):
        self.params = params
        self.dim = dim
        self.hidden = hidden

    @classmethod
    def init(cls, dim: int, hidden: int, rng: np.random.Generator) -> "LstmClassifier":
        p = ParamSet()
        for gate in cls.GATES:
            p.add("W" + gate, uniform_init(rng, (dim, hidden)))
            p.add("U" + gate, uniform_init(rng, (hidden, hidden)))
            b = uniform_init(rng, (hidden,))
            if gate == "f":
                b = np.ones(hidden)  # standard forget-gate bias, helps long gaps
            p.add("b" + gate, b)
        p.add("Wy", uniform_init(rng, (hidden, N_CLASSES)))
        p.add("by", uniform_init(rng, (N_CLASSES,)))
        return cls(p, dim, hidden)

    def forward(self, inst: EncodedInput, mode: str = "eval",
                drop_ratio: float = 0.0, drop_rng=None):
        T = len(inst)
        if T == 0:
            raise ValueError("lstm forward: empty sequence")
        p = self.params
        H = self.hidden
        h = np.zeros(H)
        c = np.zeros(H)
        steps = []
        for t in range(T):
            x = inst.X[t]
            i = _sigmoid(x @ p["Wi"] + h @ p["Ui"] + p["bi"])
            f = _sigmoid(x @ p["Wf"] + h @ p["Uf"] + p["bf"])
            o = _sigmoid(x @ p["Wo"] + h @ p["Uo"] + p["bo"])
            g = np.tanh(x @ p["Wg"] + h @ p["Ug"] + p["bg"])
            c_new = f * c + i * g
            tanh_c = np.tanh(c_new)
            h_new = o * tanh_c
            steps.append((x, h, c, i, f, o, g, tanh_c))
            h, c = h_new, c_new
        hd, mask = dropout(h, drop_ratio, mode, drop_rng)
        logits = hd @ p["Wy"] + p["by"]
        cache = (inst, steps, h, hd, mask)
        return logits, cache

    def backward(self, cache, dlogits: np.ndarray) -> np.ndarray:
        inst, steps, h_final, hd, mask = cache
        p = self.params
        g_ = self.params.grads
        g_["Wy"] += np.outer(hd, dlogits)
        g_["by"] += dlogits
        dh = (p["Wy"] @ dlogits) * mask
        dc = np.zeros(self.hidden)
        dX = np.zeros_like(inst.X)
        for t in range(len(steps) - 1, -1, -1):
            x, h_prev, c_prev, i, f, o, g, tanh_c = steps[t]
            do = dh * tanh_c
            dc = dc + dh * o * (1.0 - tanh_c * tanh_c)
            di = dc * g
            dg = dc * i
            df = dc * c_prev
            dc_prev = dc * f
            # pre-activation gradients
            zi = di * i * (1.0 - i)
            zf = df * f * (1.0 - f)
            zo = do * o * (1.0 - o)
            zg = dg * (1.0 - g * g)
            dx = np.zeros(self.dim)
            dh_prev = np.zeros(self.hidden)
            for gate, z in (("i", zi), ("f", zf), ("o", zo), ("g", zg)):
                g_["W" + gate] += np.outer(x, z)
                g_["U" + gate] += np.outer(h_prev, z)
                g_["b" + gate] += z
                dx += p["W" + gate] @ z
                dh_prev += p["U" + gate] @ z
            dX[t] = dx
            dh = dh_prev
            dc = dc_prev
        return dX


class CnnClassifier:
    """Width-5 convolution, rectifier, max-over-time pooling, linear output.

    Sequences shorter than the filter width are zero-padded on the right.
    """

    model_type = "cnn"

    def __init__(self, params: ParamSet, dim: int, n_filters: int):
        self.params = params
        self.dim = dim
        self.n_filters = n_filters

    @classmethod
    def init(cls, dim: int, n_filters: int, rng: np.random.Generator) -> "CnnClassifier":
        p = ParamSet()
        p.add("Wconv", uniform_init(rng, (n_filters, FILTER_WIDTH * dim)))
        p.add("bconv", uniform_init(rng, (n_filters,)))
        p.add("Wy", uniform_init(rng, (n_filters, N_CLASSES)))
        p.add("by", uniform_init(rng, (N_CLASSES,)))
        return cls(p, dim, n_filters)

    def forward(self, inst: EncodedInput, mode: str = "eval",
                drop_ratio: float = 0.0, drop_rng=None):
        T = len(inst)
        if T == 0:
            raise ValueError("cnn forward: empty sequence")
        p = self.params
        Xp = inst.X
        if T < FILTER_WIDTH:
            Xp = np.vstack([Xp, np.zeros((FILTER_WIDTH - T, self.dim))])
        n_pos = Xp.shape[0] - FILTER_WIDTH + 1
        # windows: (n_pos, width*dim), valid convolution stride 1
        windows = np.stack([Xp[s : s + FILTER_WIDTH].reshape(-1) for s in range(n_pos)])
        pre = windows @ p["Wconv"].T + p["bconv"]  # (n_pos, F)
        act = np.maximum(pre, 0.0)
        argmax = np.argmax(act, axis=0)  # (F,) first max wins
        pooled = act[argmax, np.arange(self.n_filters)]
        pd, mask = dropout(pooled, drop_ratio, mode, drop_rng)
        logits = pd @ p["Wy"] + p["by"]
        cache = (inst, Xp.shape[0], windows, pre, argmax, pd, mask)
        return logits, cache

    def backward(self, cache, dlogits: np.ndarray) -> np.ndarray:
        inst, padded_len, windows, pre, argmax, pd, mask = cache
        p = self.params
        g_ = self.params.grads
        g_["Wy"] += np.outer(pd, dlogits)
        g_["by"] += dlogits
        dpooled = (p["Wy"] @ dlogits) * mask
        # max routing: each filter's gradient reaches its argmax position only
        dact = np.zeros_like(pre)
        dact[argmax, np.arange(self.n_filters)] = dpooled
        dpre = dact * (pre > 0.0)
        g_["Wconv"] += dpre.T @ windows
        g_["bconv"] += dpre.sum(axis=0)
        dwindows = dpre @ p["Wconv"]  # (n_pos, width*dim)
        dXp = np.zeros((padded_len, self.dim))
        for s in range(dwindows.shape[0]):
            dXp[s : s + FILTER_WIDTH] += dwindows[s].reshape(FILTER_WIDTH, self.dim)
        return dXp[: len(inst)]


class TreeLstmClassifier:
    """Child-sum tree-LSTM over the sentence dependency tree.

    Gates i/o/u read the sum of children hidden states; each child gets its
    own forget gate f_k = sigmoid(x W_f + h_k U_f + b_f). Classification
    reads the root node's hidden state by default; readout="target" reads the
    mention node instead.
    """

    model_type = "treelstm"

    GATES = ("i", "f", "o", "u")

    def __init__(self, params: ParamSet, dim: int, hidden: int, readout: str = "root"):
        if readout not in ("root", "target"):
            raise ValueError(f"readout must be 'root' or 'target', got {readout!r}")
        self.params = params
        self.dim = dim
        self.hidden = hidden
        self.readout = readout

    @classmethod
    def init(cls, dim: int, hidden: int, rng: np.random.Generator,
             readout: str = "root") -> "TreeLstmClassifier":
        p = ParamSet()
        for gate in cls.GATES:
            p.add("W" + gate, uniform_init(rng, (dim, hidden)))
            p.add("U" + gate, uniform_init(rng, (hidden, hidden)))
            p.add("b" + gate, uniform_init(rng, (hidden,)))
        p.add("Wy", uniform_init(rng, (hidden, N_CLASSES)))
        p.add("by", uniform_init(rng, (N_CLASSES,)))
        return cls(p, dim, hidden, readout)

    def _order(self, inst: EncodedInput) -> list[int]:
        # children strictly before parents; iterative post-order from the root
        order: list[int] = []
        stack = [(inst.root_pos, False)]
        pushes = 0
        while stack:
            node, expanded = stack.pop()
            if expanded:
                order.append(node)
                continue
            pushes += 1
            if pushes > len(inst):
                raise ValueError("tree input contains a cycle")
            stack.append((node, True))
            for ch in inst.children[node]:
                stack.append((ch, False))
        if len(order) != len(inst):
            raise ValueError("tree input does not span all positions")
        return order

    def forward(self, inst: EncodedInput, mode: str = "eval",
                drop_ratio: float = 0.0, drop_rng=None):
        if len(inst) == 0:
            raise ValueError("treelstm forward: empty tree")
        if inst.children is None:
            raise ValueError("treelstm forward: input lacks tree structure")
        p = self.params
        H = self.hidden
        order = self._order(inst)
        h = np.zeros((len(inst), H))
        c = np.zeros((len(inst), H))
        node_cache: dict[int, tuple] = {}
        for j in order:
            x = inst.X[j]
            kids = inst.children[j]
            h_sum = h[list(kids)].sum(axis=0) if kids else np.zeros(H)
            i = _sigmoid(x @ p["Wi"] + h_sum @ p["Ui"] + p["bi"])
            o = _sigmoid(x @ p["Wo"] + h_sum @ p["Uo"] + p["bo"])
            u = np.tanh(x @ p["Wu"] + h_sum @ p["Uu"] + p["bu"])
            fk = [_sigmoid(x @ p["Wf"] + h[k] @ p["Uf"] + p["bf"]) for k in kids]
            c[j] = i * u + sum((fk[n] * c[k] for n, k in enumerate(kids)), np.zeros(H))
            tanh_c = np.tanh(c[j])
            h[j] = o * tanh_c
            node_cache[j] = (x, h_sum, i, o, u, fk, tanh_c)
        read = inst.root_pos if self.readout == "root" else inst.target_pos
        hd, mask = dropout(h[read], drop_ratio, mode, drop_rng)
        logits = hd @ p["Wy"] + p["by"]
        cache = (inst, order, h, c, node_cache, read, hd, mask)
        return logits, cache

    def backward(self, cache, dlogits: np.ndarray) -> np.ndarray:
        inst, order, h, c, node_cache, read, hd, mask = cache
        p = self.params
        g_ = self.params.grads
        H = self.hidden
        g_["Wy"] += np.outer(hd, dlogits)
        g_["by"] += dlogits
        dh = np.zeros((len(inst), H))
        dc = np.zeros((len(inst), H))
        dh[read] = (p["Wy"] @ dlogits) * mask
        dX = np.zeros_like(inst.X)
        for j in reversed(order):  # parents before children
            x, h_sum, i, o, u, fk, tanh_c = node_cache[j]
            kids = inst.children[j]
            dhj, dcj = dh[j], dc[j]
            do = dhj * tanh_c
            dcj = dcj + dhj * o * (1.0 - tanh_c * tanh_c)
            di = dcj * u
            du = dcj * i
            zi = di * i * (1.0 - i)
            zo = do * o * (1.0 - o)
            zu = du * (1.0 - u * u)
            dx = np.zeros(self.dim)
            dh_sum = np.zeros(H)
            for gate, z in (("i", zi), ("o", zo), ("u", zu)):
                g_["W" + gate] += np.outer(x, z)
                g_["U" + gate] += np.outer(h_sum, z)
                g_["b" + gate] += z
                dx += p["W" + gate] @ z
                dh_sum += p["U" + gate] @ z
            for n, k in enumerate(kids):
                df = dcj * c[k]
                zf = df * fk[n] * (1.0 - fk[n])
                g_["Wf"] += np.outer(x, zf)
                g_["Uf"] += np.outer(h[k], zf)
                g_["bf"] += zf
                dx += p["Wf"] @ zf
                dh[k] += dh_sum + p["Uf"] @ zf
                dc[k] += dcj * fk[n]
            dX[j] = dx
        return dX


MODEL_TYPES = ("lstm", "cnn", "treelstm")

_MODEL_CLASSES = {
    "lstm": LstmClassifier,
    "cnn": CnnClassifier,
    "treelstm": TreeLstmClassifier,
}


def build_model(model_type: str, dim: int, hidden: int,
                rng: np.random.Generator, tree_readout: str = "root"):
    """Initialize a fresh classifier; hidden doubles as the CNN filter count."""
    if model_type not in _MODEL_CLASSES:
        raise ValueError(f"unknown model type {model_type!r}")
    if model_type == "treelstm":
        return TreeLstmClassifier.init(dim, hidden, rng, readout=tree_readout)
    return _MODEL_CLASSES[model_type].init(dim, hidden, rng)


def restore_model(model_type: str, params: ParamSet, dim: int, hidden: int,
                  tree_readout: str = "root"):
    """Wrap already-loaded parameters (checkpoint restore path)."""
    if model_type == "treelstm":
        return TreeLstmClassifier(params, dim, hidden, readout=tree_readout)
    if model_type not in _MODEL_CLASSES:
        raise ValueError(f"unknown model type {model_type!r}")
    return _MODEL_CLASSES[model_type](params, dim, hidden)


def model_loss(model, inst: EncodedInput, gold: int, mode: str = "eval",
               drop_ratio: float = 0.0, drop_rng=None):
    """Forward + cross-entropy + backward. Returns (loss, prob, dX).

    Accumulates parameter gradients into model.params without zeroing first,
    so callers can average over a batch.
    """
    logits, cache = model.forward(inst, mode=mode, drop_ratio=drop_ratio, drop_rng=drop_rng)
    loss, prob, dlogits = softmax_xent(logits, gold)
    dX = model.backward(cache, dlogits)
    return loss, prob, dX


def classify(model, inst: EncodedInput) -> tuple[TemporalStatus, np.ndarray]:
    """Eval-mode prediction; ties break toward the lower class index."""
    logits, _ = model.forward(inst, mode="eval")
    prob = softmax(logits)
    return TemporalStatus(int(np.argmax(logits))), prob


def random_tree_children(n: int, rng: np.random.Generator) -> tuple[tuple[int, ...], ...]:
    """Random rooted tree over positions 0..n-1 with root 0; each node's
    parent is drawn among lower-numbered nodes, so the result is acyclic."""
    children: list[list[int]] = [[] for _ in range(n)]
    for j in range(1, n):
        children[int(rng.integers(0, j))].append(j)
    return tuple(tuple(c) for c in children)


def random_instance(model_type: str, dim: int, length: int,
                    rng: np.random.Generator) -> EncodedInput:
    """Synthetic input for gradient checks and invariance tests."""
    X = rng.standard_normal((length, dim))
    forms = tuple(f"w{t}" for t in range(length))
    rows = np.full(length, -1, dtype=np.int64)
    if model_type != "treelstm":
        return EncodedInput(forms=forms, X=X, rows=rows)
    return EncodedInput(
        forms=forms,
        X=X,
        rows=rows,
        children=random_tree_children(length, rng),
        root_pos=0,
        target_pos=int(rng.integers(0, length)),
    )


def gradcheck_model(model_type: str, seed: int, dim: int = 6, hidden: int = 8,
                    length: int | None = None, eps: float = 1e-5) -> float:
    """Max relative error between analytic and central-difference gradients
    for one randomly initialized model on one random input.

    Default lengths: 9 for the CNN (several pooling positions), 5 for the
    recurrent models (deeper inputs shrink the verifiable gradient range).
    """
    if length is None:
        length = 9 if model_type == "cnn" else 5
    rng = np.random.default_rng(seed)
    model = build_model(model_type, dim, hidden, rng)
    inst = random_instance(model_type, dim, length, rng)
    gold = int(rng.integers(0, N_CLASSES))

    def loss_fn():
        loss, _, _ = model_loss(model, inst, gold, mode="eval")
        return loss

    return grad_check(loss_fn, model.params, eps=eps)
