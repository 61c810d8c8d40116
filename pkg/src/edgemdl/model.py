"""Fitted cluster models for every (object type, relation, attribute) and their JSON form."""

from __future__ import annotations

import json
from collections.abc import Iterator, Mapping

import numpy as np

from .discretize import BinSpec
from .score import AttributeModel

FORMAT = "edgemdl-cluster-model"
VERSION = 1

Key = tuple[str, str, str]


class ModelFormatError(ValueError):
    pass


class ClusterModel(Mapping[Key, AttributeModel]):
    """Mapping (object type, relation, attribute) -> AttributeModel, in fit order."""

    def __init__(self, models: dict[Key, AttributeModel] | None = None):
        self._models: dict[Key, AttributeModel] = dict(models or {})

    def __getitem__(self, key: Key) -> AttributeModel:
        return self._models[key]

    def __iter__(self) -> Iterator[Key]:
        return iter(self._models)

    def __len__(self) -> int:
        return len(self._models)

    def add(self, key: Key, model: AttributeModel) -> None:
        self._models[key] = model

    def to_json(self) -> str:
        entries = []
        for (b, r, w), m in self._models.items():
            entries.append(
                {
                    "object_type": b,
                    "relation": r,
                    "attribute": w,
                    "bins": m.bins.to_dict(),
                    "centers": [[float(x) for x in c] for c in m.centers],
                    "proportions": [float(x) for x in m.proportions],
                }
            )
        return json.dumps({"format": FORMAT, "version": VERSION, "models": entries}, indent=1) + "\n"

    @classmethod
    def from_json(cls, text: str) -> ClusterModel:
        try:
            doc = json.loads(text)
        except json.JSONDecodeError as exc:
            raise ModelFormatError(f"malformed cluster model: {exc}") from None
        if not isinstance(doc, dict) or doc.get("format") != FORMAT:
            raise ModelFormatError("not a cluster model document")
        if doc.get("version") != VERSION:
            raise ModelFormatError(f"unsupported cluster model version {doc.get('version')!r}")
        out = cls()
        for i, e in enumerate(doc.get("models", [])):
            try:
                bins = BinSpec.from_dict(e["bins"])
                centers = np.asarray(e["centers"], dtype=np.float64)
                rho = np.asarray(e["proportions"], dtype=np.float64)
                key = (e["object_type"], e["relation"], e["attribute"])
            except (KeyError, TypeError, ValueError) as exc:
                raise ModelFormatError(f"models[{i}]: {exc}") from None
            if centers.ndim != 2 or centers.shape[1] != bins.d or len(rho) != len(centers):
                raise ModelFormatError(f"models[{i}]: centers/proportions do not match {bins.d} bins")
            out.add(key, AttributeModel(bins, centers, rho))
        return out
