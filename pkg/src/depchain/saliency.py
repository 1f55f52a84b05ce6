"""First-order gradient saliency over input embeddings, with CSV/HTML output.

The saliency of a token is the mean over embedding dimensions of the absolute
derivative of the cross-entropy loss with respect to that token's embedding
vector. The loss is taken at the gold label when one is supplied, otherwise
at the model's own prediction.
"""

from __future__ import annotations

import html as _html
import re
from dataclasses import dataclass

import numpy as np

from .corpus import TemporalStatus
from .models import EncodedInput, model_loss, classify

__all__ = [
    "SaliencyMap",
    "compute_saliency",
    "emit_heatmap",
    "parse_heatmap_csv",
    "heatmap_filename",
]


@dataclass(frozen=True)
class SaliencyMap:
    tokens: tuple[str, ...]
    scores: tuple[float, ...]  # per-token mean absolute derivative, >= 0
    raw: np.ndarray | None  # (T, dim) absolute derivatives; None for parsed maps
    predicted: TemporalStatus | None
    gold: TemporalStatus | None

    def __post_init__(self):
        if len(self.tokens) != len(self.scores):
            raise ValueError("tokens and scores lengths differ")
        if any(s < 0 for s in self.scores):
            raise ValueError("scores must be nonnegative")

    def __len__(self) -> int:
        return len(self.tokens)

    def top_token(self) -> int:
        """Position of the highest-scoring token (first on ties)."""
        return int(np.argmax(np.array(self.scores)))


def compute_saliency(model, inst: EncodedInput,
                     label: TemporalStatus | None = None) -> SaliencyMap:
    """Backpropagate the loss at `label` (or the prediction) to the input
    embeddings; scores are means of per-dimension absolute derivatives."""
    predicted, _ = classify(model, inst)
    at = predicted if label is None else label
    _, _, dX = model_loss(model, inst, int(at), mode="eval")
    model.params.zero_grads()  # analysis must not leak into training state
    raw = np.abs(dX)
    scores = tuple(float(s) for s in raw.mean(axis=1))
    return SaliencyMap(
        tokens=inst.forms,
        scores=scores,
        raw=raw,
        predicted=predicted,
        gold=label,
    )


def _label_name(label: TemporalStatus | None) -> str:
    return "-" if label is None else label.name


def emit_heatmap(smap: SaliencyMap, fmt: str) -> str:
    """Render a map as CSV (position,token,score) or a self-contained HTML
    page whose span backgrounds scale linearly with score/max."""
    if len(smap) == 0:
        raise ValueError("empty saliency map")
    if fmt == "csv":
        lines = ["position,token,score"]
        for pos, (tok, score) in enumerate(zip(smap.tokens, smap.scores), start=1):
            lines.append(f"{pos},{_csv_field(tok)},{score:.6f}")
        return "\n".join(lines) + "\n"
    if fmt != "html":
        raise ValueError(f"unknown heatmap format {fmt!r}")
    peak = max(smap.scores)
    spans = []
    for pos, (tok, score) in enumerate(zip(smap.tokens, smap.scores), start=1):
        alpha = 0.0 if peak == 0.0 else score / peak
        style = f"background: rgba(178, 24, 43, {alpha:.4f})"
        title = f"position {pos}, score {score:.6f}"
        spans.append(
            f'<span class="tok" style="{style}" title="{title}">'
            f"{_html.escape(tok)}</span>"
        )
    caption = (
        f"predicted: {_label_name(smap.predicted)} "
        f"gold: {_label_name(smap.gold)}"
    )
    return (
        "<!DOCTYPE html>\n"
        '<html lang="en">\n<head>\n<meta charset="utf-8">\n'
        "<title>saliency heatmap</title>\n"
        "<style>\n"
        "body { font-family: serif; margin: 2em; background: white; color: black; }\n"
        ".tok { padding: 0.15em 0.25em; margin: 0 0.1em; border-radius: 3px; }\n"
        ".caption { font-size: 0.9em; color: #333; }\n"
        "</style>\n</head>\n<body>\n"
        f'<p class="caption">{_html.escape(caption)}</p>\n'
        f'<p class="tokens">{" ".join(spans)}</p>\n'
        "</body>\n</html>\n"
    )


def _csv_field(value: str) -> str:
    if any(c in value for c in ',"\n'):
        return '"' + value.replace('"', '""') + '"'
    return value


def _parse_csv_field(value: str) -> str:
    if value.startswith('"') and value.endswith('"'):
        return value[1:-1].replace('""', '"')
    return value


def parse_heatmap_csv(text: str) -> SaliencyMap:
    """Inverse of the CSV emitter; labels and raw derivatives are not stored
    in the CSV and come back as None."""
    lines = [ln for ln in text.splitlines() if ln]
    if not lines or lines[0] != "position,token,score":
        raise ValueError("line 1: expected header 'position,token,score'")
    tokens: list[str] = []
    scores: list[float] = []
    for lineno, line in enumerate(lines[1:], start=2):
        parts = line.rsplit(",", 1)
        if len(parts) != 2:
            raise ValueError(f"line {lineno}: malformed row {line!r}")
        head, score_s = parts
        pos_s, _, tok = head.partition(",")
        try:
            pos = int(pos_s)
            score = float(score_s)
        except ValueError:
            raise ValueError(f"line {lineno}: malformed row {line!r}") from None
        if pos != lineno - 1:
            raise ValueError(f"line {lineno}: position {pos} out of order")
        tokens.append(_parse_csv_field(tok))
        scores.append(score)
    return SaliencyMap(
        tokens=tuple(tokens),
        scores=tuple(scores),
        raw=None,
        predicted=None,
        gold=None,
    )


def heatmap_filename(doc_id: str, sent_id: str, token_id: int, fmt: str) -> str:
    """<doc>_<sent>_<token>.<ext> with ids sanitized for the filesystem."""
    def clean(s: str) -> str:
        return re.sub(r"[^A-Za-z0-9_-]", "-", s) or "x"

    return f"{clean(doc_id)}_{clean(sent_id)}_{token_id}.{fmt}"
