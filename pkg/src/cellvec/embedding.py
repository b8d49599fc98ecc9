"""Skip-gram negative-sampling training, similarity queries, persistence.

The trainer follows the canonical SGNS recipe: for every center token, the
context positions within a per-center window drawn uniformly from
[1, window] form positive pairs, each trained against ``negatives`` draws
from the unigram^power noise distribution with logistic loss. Input vectors
start uniform in [-0.5/dim, 0.5/dim], output vectors at zero, and the
learning rate decays linearly from lr_start to lr_end over the exact total
number of pairs, which is known up front because all window widths (and
subsampling decisions) are pre-drawn from a dedicated RNG stream. That
pre-draw costs epochs * n_tokens small integers of memory and buys exact
budget accounting plus bit-reproducible runs at threads=1.

Updates are applied once per center position: scores for the center's
contexts and negatives are taken against the pre-update matrices, then all
row updates (duplicates accumulated exactly) and the center update are
applied. Negative draws that collide with their pair's positive target are
dropped. With threads > 1 sentence shards update the shared matrices
concurrently without locks; that mode trades determinism for speed and the
reproducibility contract holds only at threads=1.
"""

from __future__ import annotations

import math
import os
import threading
from typing import Optional

import numpy as np
from sklearn.base import BaseEstimator

from .errors import FormatError, TrainingDivergedError
from .validation import check_count, check_positive

_SCORE_CLIP = 30.0  # sigmoid is saturated to ~1e-13 beyond this


def cosine_similarity(a, b) -> float:
    """dot(a, b) / (|a| * |b|); raises on zero-norm or mismatched vectors."""
    a = np.asarray(a, dtype=np.float64)
    b = np.asarray(b, dtype=np.float64)
    if a.shape != b.shape or a.ndim != 1:
        raise ValueError(f"vectors must share one dimension, got {a.shape} and {b.shape}")
    na = math.sqrt(float(a @ a))
    nb = math.sqrt(float(b @ b))
    if na == 0.0 or nb == 0.0:
        raise ValueError("cosine similarity is undefined for a zero-norm vector")
    return float(a @ b) / (na * nb)


def sgns_loss_and_grads(center, outputs, labels):
    """Loss and analytic gradients for one (center, outputs, labels) sample.

    ``outputs`` is a (m, dim) matrix of output rows (the positive context
    plus negatives), ``labels`` the 1/0 targets. Returns
    (loss, grad_center, grad_outputs) for the summed logistic loss. This is
    the reference formulation that the training loop's updates descend.
    """
    center = np.asarray(center, dtype=np.float64)
    outputs = np.asarray(outputs, dtype=np.float64)
    labels = np.asarray(labels, dtype=np.float64)
    s = outputs @ center
    # log sigma(s) = -log(1 + e^-s), log(1 - sigma(s)) = -log(1 + e^s)
    loss = float(np.sum(labels * np.logaddexp(0.0, -s) + (1.0 - labels) * np.logaddexp(0.0, s)))
    dscore = 1.0 / (1.0 + np.exp(-s)) - labels
    grad_center = dscore @ outputs
    grad_outputs = np.outer(dscore, center)
    return loss, grad_center, grad_outputs


class EmbeddingModel:
    """Per-cell vectors with similarity queries.

    ``vectors`` are the published (input) embeddings used by all similarity
    queries; ``context_vectors`` are the training-side output weights kept
    for resumable experiments and persisted to a sidecar file.
    """

    def __init__(self, tokens, vectors, context_vectors=None):
        self.tokens = [int(t) for t in tokens]
        self.vectors = np.asarray(vectors, dtype=np.float64)
        self.context_vectors = (
            None if context_vectors is None else np.asarray(context_vectors, dtype=np.float64)
        )
        if self.vectors.ndim != 2 or self.vectors.shape[0] != len(self.tokens):
            raise ValueError("vectors must be a (n_tokens, dim) matrix")
        if not np.all(np.isfinite(self.vectors)):
            raise ValueError("vectors contain non-finite entries")
        self._index = {t: i for i, t in enumerate(self.tokens)}
        self._token_arr = np.asarray(self.tokens, dtype=np.uint64)
        self._unit: Optional[np.ndarray] = None

    def __len__(self):
        return len(self.tokens)

    def __contains__(self, token):
        return int(token) in self._index

    @property
    def dim(self) -> int:
        return self.vectors.shape[1]

    def index(self, token) -> int:
        return self._index[int(token)]

    def vector(self, token) -> np.ndarray:
        return self.vectors[self._index[int(token)]]

    @property
    def unit_vectors(self) -> np.ndarray:
        """Row-normalized copy of the input vectors, cached."""
        if self._unit is None:
            norms = np.linalg.norm(self.vectors, axis=1, keepdims=True)
            if np.any(norms == 0.0):
                raise ValueError("model contains zero-norm vectors")
            self._unit = self.vectors / norms
        return self._unit

    def similarity(self, token_a, token_b) -> float:
        return cosine_similarity(self.vector(token_a), self.vector(token_b))

    def top_k(self, target, k: int) -> list:
        """The k most cosine-similar cells to ``target``, excluding itself.

        Exact brute-force search; ties broken by ascending Morton code.
        """
        if k < 0:
            raise ValueError("k must be >= 0")
        idx = self._index[int(target)]  # KeyError when target not in vocab
        if k == 0:
            return []
        unit = self.unit_vectors
        sims = unit @ unit[idx]
        keep = np.arange(len(self.tokens)) != idx
        sims = sims[keep]
        toks = self._token_arr[keep]
        order = np.lexsort((toks, -sims))[:k]
        return [(int(toks[i]), float(sims[i])) for i in order]


def save_embeddings(model: EmbeddingModel, path) -> None:
    """Text interchange format: header ``|V| dim``, then one ``token v1 ...``
    line per token at 9 significant digits. Context vectors go to a sidecar
    file at ``path + '.ctx'`` with the same layout."""
    if len(model) < 1:
        raise ValueError("refusing to save an empty model")
    _write_matrix(str(path), model.tokens, model.vectors)
    if model.context_vectors is not None:
        _write_matrix(str(path) + ".ctx", model.tokens, model.context_vectors)


def _write_matrix(path: str, tokens, matrix) -> None:
    with open(path, "w", encoding="utf-8") as sink:
        sink.write(f"{matrix.shape[0]} {matrix.shape[1]}\n")
        for tok, row in zip(tokens, matrix):
            sink.write(f"{tok} " + " ".join(f"{v:.9g}" for v in row) + "\n")


def _read_matrix(path: str):
    with open(path, "r", encoding="utf-8") as stream:
        header = stream.readline().split()
        if len(header) != 2:
            raise FormatError(f"{path}: expected header '<n_tokens> <dim>'")
        try:
            n, dim = int(header[0]), int(header[1])
        except ValueError:
            raise FormatError(f"{path}: malformed header {header!r}") from None
        tokens = []
        matrix = np.empty((n, dim), dtype=np.float64)
        for i in range(n):
            parts = stream.readline().split()
            if len(parts) != dim + 1:
                raise FormatError(f"{path}: row {i + 2} has {len(parts)} fields, expected {dim + 1}")
            tokens.append(int(parts[0]))
            matrix[i] = [float(v) for v in parts[1:]]
    return tokens, matrix


def load_embeddings(path) -> EmbeddingModel:
    """Inverse of save_embeddings; the sidecar is loaded when present."""
    tokens, vectors = _read_matrix(str(path))
    ctx = None
    ctx_path = str(path) + ".ctx"
    if os.path.exists(ctx_path):
        ctx_tokens, ctx = _read_matrix(ctx_path)
        if ctx_tokens != tokens:
            raise FormatError(f"{ctx_path}: token table does not match {path}")
    return EmbeddingModel(tokens, vectors, ctx)


class SkipGramEmbedder(BaseEstimator):
    """Skip-gram negative-sampling trainer over an encoded corpus.

    Hyperparameters follow the estimator convention (set in __init__, fitted
    state in ``model_``). ``fit`` expects a corpus.Corpus and stores the
    trained EmbeddingModel in ``model_``.
    """

    def __init__(self, dim: int = 20, window: int = 5, negatives: int = 5,
                 epochs: int = 5, lr_start: float = 0.025, lr_end: float = 0.0001,
                 unigram_power: float = 0.75, subsample_t: float = 0.0,
                 seed: int = 1, threads: int = 1):
        self.dim = dim
        self.window = window
        self.negatives = negatives
        self.epochs = epochs
        self.lr_start = lr_start
        self.lr_end = lr_end
        self.unigram_power = unigram_power
        self.subsample_t = subsample_t
        self.seed = seed
        self.threads = threads

    def _check_params(self):
        check_count(self.dim, "dim")
        check_count(self.window, "window")
        check_count(self.negatives, "negatives")
        check_count(self.epochs, "epochs")
        check_count(self.threads, "threads")
        check_positive(self.lr_start, "lr_start")
        check_positive(self.lr_end, "lr_end")
        if self.lr_end >= self.lr_start:
            raise ValueError("lr_start must exceed lr_end")
        if self.subsample_t < 0:
            raise ValueError("subsample_t must be >= 0")

    def fit(self, corpus, y=None):
        self._check_params()
        vocab = corpus.vocab
        n_vocab = len(vocab)
        if n_vocab < 2:
            raise ValueError("need a vocabulary of at least 2 tokens to train")
        sentences = [s for s in corpus.sequences if len(s) >= 2]
        if not sentences:
            raise ValueError("corpus has no trainable sequences")

        dim = int(self.dim)
        window = int(self.window)
        k_neg = int(self.negatives)
        epochs = int(self.epochs)

        rng_init = np.random.default_rng(np.random.SeedSequence(entropy=(int(self.seed), 0)))
        rng_sched = np.random.default_rng(np.random.SeedSequence(entropy=(int(self.seed), 1)))

        w_in = rng_init.uniform(-0.5 / dim, 0.5 / dim, (n_vocab, dim))
        w_out = np.zeros((n_vocab, dim))

        noise = vocab.counts.astype(np.float64) ** float(self.unigram_power)
        noise_cdf = np.cumsum(noise / noise.sum())

        plan, total_pairs = self._draw_schedule(sentences, rng_sched, epochs, window)
        self.total_pairs_ = total_pairs
        if total_pairs == 0:
            raise ValueError("the drawn schedule produced no training pairs")

        lr_start = float(self.lr_start)
        lr_slope = (float(self.lr_end) - lr_start) / total_pairs
        done = [0]

        if int(self.threads) == 1:
            rng_neg = np.random.default_rng(np.random.SeedSequence(entropy=(int(self.seed), 2)))
            for epoch, (sents, widths, pair_counts) in enumerate(plan):
                self._train_shard(sents, widths, pair_counts, w_in, w_out, noise_cdf,
                                  k_neg, lr_start, lr_slope, done, rng_neg)
                self._check_finite(w_in, w_out, epoch)
        else:
            n_threads = int(self.threads)
            for epoch, (sents, widths, pair_counts) in enumerate(plan):
                workers = []
                for t in range(n_threads):
                    rng_t = np.random.default_rng(
                        np.random.SeedSequence(entropy=(int(self.seed), 2, t, epoch)))
                    shard = slice(t, None, n_threads)
                    workers.append(threading.Thread(
                        target=self._train_shard,
                        args=(sents[shard], widths[shard], pair_counts[shard], w_in, w_out,
                              noise_cdf, k_neg, lr_start, lr_slope, done, rng_t)))
                for w in workers:
                    w.start()
                for w in workers:
                    w.join()
                self._check_finite(w_in, w_out, epoch)

        self.model_ = EmbeddingModel(vocab.tokens, w_in, w_out)
        return self

    def _draw_schedule(self, sentences, rng, epochs: int, window: int):
        """Pre-draw subsampling and window widths for every epoch.

        Returns ([(sentences, per-sentence widths, per-sentence pair counts)]
        per epoch, exact total pair count).
        """
        keep_prob = None
        if self.subsample_t > 0:
            # frequency of each vocab index among the training tokens
            total = sum(len(s) for s in sentences)
            size = max(int(s.max()) for s in sentences) + 1
            freq = np.zeros(size, dtype=np.float64)
            for s in sentences:
                np.add.at(freq, s, 1.0)
            f = freq / total
            with np.errstate(divide="ignore", invalid="ignore"):
                ratio = self.subsample_t / f
                keep_prob = np.minimum(1.0, np.sqrt(ratio) + ratio)
            keep_prob[~np.isfinite(keep_prob)] = 1.0

        plan = []
        total_pairs = 0
        for _ in range(epochs):
            if keep_prob is None:
                sents_e = sentences
            else:
                sents_e = []
                for s in sentences:
                    kept = s[rng.random(len(s)) < keep_prob[s]]
                    if len(kept) >= 2:
                        sents_e.append(kept)
            widths_e = []
            counts_e = np.empty(len(sents_e), dtype=np.int64)
            for j, s in enumerate(sents_e):
                n = len(s)
                w = rng.integers(1, window + 1, size=n).astype(np.int32)
                pos = np.arange(n, dtype=np.int32)
                counts_e[j] = int(np.minimum(pos, w).sum() + np.minimum(n - 1 - pos, w).sum())
                widths_e.append(w)
            plan.append((sents_e, widths_e, counts_e))
            total_pairs += int(counts_e.sum())
        return plan, total_pairs

    @staticmethod
    def _train_shard(sentences, widths, pair_counts, w_in, w_out, noise_cdf,
                     k_neg, lr_start, lr_slope, done, rng):
        n_negs = int(np.sum(pair_counts)) * k_neg
        pool = np.searchsorted(noise_cdf, rng.random(n_negs)).astype(np.int32)
        pool_pos = 0
        for sen, w_sen in zip(sentences, widths):
            length = len(sen)
            for i in range(length):
                w = w_sen[i]
                lo = i - w
                if lo < 0:
                    lo = 0
                hi = i + w + 1
                if hi > length:
                    hi = length
                m = hi - lo - 1
                if m == 0:
                    continue
                rows = np.empty(m + m * k_neg, dtype=np.int32)
                rows[: i - lo] = sen[lo:i]
                rows[i - lo: m] = sen[i + 1: hi]
                rows[m:] = pool[pool_pos: pool_pos + m * k_neg]
                pool_pos += m * k_neg
                lr = lr_start + lr_slope * done[0]
                center = sen[i]
                v = w_in[center]
                out_rows = w_out[rows]
                scores = np.clip(out_rows @ v, -_SCORE_CLIP, _SCORE_CLIP)
                g = -lr / (1.0 + np.exp(-scores))
                g[:m] += lr
                collide = rows[m:] == np.repeat(rows[:m], k_neg)
                if collide.any():
                    g[m:][collide] = 0.0
                grad_in = g @ out_rows
                np.add.at(w_out, rows, g[:, None] * v)
                w_in[center] = v + grad_in
                done[0] += m

    @staticmethod
    def _check_finite(w_in, w_out, epoch: int):
        if not (np.all(np.isfinite(w_in)) and np.all(np.isfinite(w_out))):
            raise TrainingDivergedError(
                f"non-finite weights after epoch {epoch}; lower lr_start or check the corpus")


def train_embeddings(corpus, **params) -> EmbeddingModel:
    """One-call convenience wrapper around SkipGramEmbedder."""
    return SkipGramEmbedder(**params).fit(corpus).model_
