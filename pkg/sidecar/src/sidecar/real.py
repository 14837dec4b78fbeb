"""Model-backed backends over Hugging Face pipelines.

Imports are deferred so stub mode never touches transformers; model
availability is validated once at startup and failures are fatal.
"""

from __future__ import annotations

from .config import SidecarConfig


class RealBackends:
    def __init__(self, config: SidecarConfig):
        try:
            from transformers import pipeline
        except ImportError as exc:
            raise RuntimeError(
                "real mode requires the 'real' extra (transformers + torch)"
            ) from exc
        self._pipelines = {}
        try:
            if "predict" in config.capabilities:
                self._pipelines["predict"] = pipeline(
                    "text-classification", model=config.predict_model, top_k=None
                )
            if "mlm" in config.capabilities:
                self._pipelines["mlm"] = pipeline("fill-mask", model=config.mlm_model)
            if "translate" in config.capabilities:
                self._pipelines["translate_out"] = pipeline(
                    "translation", model=config.translate_model_out
                )
                self._pipelines["translate_back"] = pipeline(
                    "translation", model=config.translate_model_back
                )
        except Exception as exc:
            raise RuntimeError(f"real mode could not load models: {exc}") from exc

    def predict(self, texts: list[str]) -> list[list[float]]:
        out = []
        for rows in self._pipelines["predict"](texts):
            ordered = sorted(rows, key=lambda r: r["label"])
            total = sum(r["score"] for r in ordered)
            out.append([r["score"] / total for r in ordered])
        return out

    def mlm(self, text: str, mask_indices: list[int], top_k: int) -> list[list[str]]:
        fill = self._pipelines["mlm"]
        tokens = text.split()
        suggestions = []
        for index in mask_indices:
            masked = list(tokens)
            masked[index] = fill.tokenizer.mask_token
            ranked = fill(" ".join(masked), top_k=top_k)
            suggestions.append([r["token_str"].strip() for r in ranked][:top_k])
        return suggestions

    def translate(self, text: str, pivot: str) -> str:
        pivoted = self._pipelines["translate_out"](text)[0]["translation_text"]
        return self._pipelines["translate_back"](pivoted)[0]["translation_text"]
