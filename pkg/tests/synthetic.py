"""Synthetic corpus generator: two Gaussian clusters per MWE, separated by a
known margin along a per-MWE coordinate axis with a random sign.

The geometry is the oracle: same-MWE same-class pairs differ only by noise,
cross-class pairs differ by `separation * sigma` along the MWE's axis, and
because both axis and sign are drawn per MWE, nothing about the
idiomatic/literal distinction transfers across MWEs. A classifier trained on
the disjoint-MWE block therefore has no usable signal on the query block,
while same-MWE pair comparison stays easy.
"""

from dataclasses import dataclass

import numpy as np

from idiomdetect.corpus import Corpus, Label, Sample, SplitKind
from idiomdetect.embedding import EmbeddingTable, TableProvider


@dataclass
class SyntheticData:
    train: Corpus  # one-shot train split: support samples and pair source
    queries: Corpus  # dev split: held-out queries with gold labels
    zero_train: Corpus  # zero-shot train split: disjoint MWEs
    provider: TableProvider
    table: EmbeddingTable


def make_synthetic(
    n_mwes: int = 20,
    dim: int = 256,
    per_class_train: int = 8,
    per_class_query: int = 4,
    separation: float = 12.0,
    sigma: float = 1.0,
    axes_per_mwe: int = 4,
    seed: int = 0,
    zero_mwes: int = 20,
    zero_per_class: int = 8,
) -> SyntheticData:
    rng = np.random.default_rng(seed)
    table = EmbeddingTable(
        dim=dim,
        meta={"source": "synthetic", "separation": separation, "sigma": sigma, "seed": seed},
    )
    axes = rng.choice(dim, size=(n_mwes + zero_mwes) * axes_per_mwe, replace=False)
    axes = axes.reshape(n_mwes + zero_mwes, axes_per_mwe)

    def cluster_centers(mwe_axes: np.ndarray) -> dict[Label, np.ndarray]:
        # Symmetric half-offsets keep both classes at the same expected norm,
        # so nothing label-correlated survives across MWEs (axes and signs
        # are drawn fresh per MWE).
        base = rng.normal(0.0, 1.0, size=dim)
        offset = np.zeros(dim)
        per_axis = separation * sigma / (2.0 * np.sqrt(len(mwe_axes)))
        for axis in mwe_axes:
            offset[axis] = per_axis * float(rng.choice((-1.0, 1.0)))
        return {Label.IDIOMATIC: base - offset, Label.LITERAL: base + offset}

    def emit(
        prefix: str, mwe: str, language: str, centers, count: int, split: SplitKind
    ) -> list[Sample]:
        samples = []
        for label, tag in ((Label.IDIOMATIC, "i"), (Label.LITERAL, "l")):
            for k in range(count):
                sid = f"{prefix}{tag}{k}"
                vec = centers[label] + sigma * rng.normal(size=dim)
                table.add(str(split), sid, vec.astype(np.float32))
                samples.append(
                    Sample(
                        id=sid,
                        language=language,
                        mwe=mwe,
                        prev_ctx="",
                        target=f"synthetic sentence {sid}",
                        next_ctx="",
                        label=label,
                        split=split,
                    )
                )
        # Shuffle within the MWE block: corpus order must not encode the
        # class, or canonical pair orientation would leak the label.
        return [samples[i] for i in rng.permutation(len(samples))]

    train_samples: list[Sample] = []
    query_samples: list[Sample] = []
    for m in range(n_mwes):
        centers = cluster_centers(axes[m])
        language = "EN" if m % 2 == 0 else "PT"
        mwe = f"mwe_{m}"
        train_samples += emit(f"t{m}_", mwe, language, centers, per_class_train, SplitKind.ONE_SHOT_TRAIN)
        query_samples += emit(f"q{m}_", mwe, language, centers, per_class_query, SplitKind.DEV)

    zero_samples: list[Sample] = []
    for m in range(zero_mwes):
        centers = cluster_centers(axes[n_mwes + m])
        language = "EN" if m % 2 == 0 else "PT"
        zero_samples += emit(
            f"z{m}_", f"zero_mwe_{m}", language, centers, zero_per_class, SplitKind.ZERO_SHOT_TRAIN
        )

    return SyntheticData(
        train=Corpus(samples=tuple(train_samples), split=SplitKind.ONE_SHOT_TRAIN),
        queries=Corpus(samples=tuple(query_samples), split=SplitKind.DEV),
        zero_train=Corpus(samples=tuple(zero_samples), split=SplitKind.ZERO_SHOT_TRAIN),
        provider=TableProvider(table),
        table=table,
    )
