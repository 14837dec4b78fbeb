from __future__ import annotations

from dataclasses import dataclass

MODE_STUB = "stub"
MODE_REAL = "real"

CAPABILITIES = ("predict", "mlm", "translate")


@dataclass(frozen=True)
class SidecarConfig:
    mode: str = MODE_STUB
    capabilities: tuple[str, ...] = CAPABILITIES
    host: str = "127.0.0.1"
    port: int = 8200
    max_batch: int = 64
    stub_num_classes: int = 2
    # real-mode model identifiers; validated at startup
    predict_model: str = "distilbert-base-uncased-finetuned-sst-2-english"
    mlm_model: str = "bert-base-uncased"
    translate_model_out: str = "Helsinki-NLP/opus-mt-en-de"
    translate_model_back: str = "Helsinki-NLP/opus-mt-de-en"

    def __post_init__(self):
        if self.mode not in (MODE_STUB, MODE_REAL):
            raise ValueError(f"mode must be 'stub' or 'real', got {self.mode!r}")
        unknown = set(self.capabilities) - set(CAPABILITIES)
        if unknown:
            raise ValueError(f"unknown capabilities: {sorted(unknown)}")
        if not self.capabilities:
            raise ValueError("at least one capability must be configured")
        if self.max_batch < 1:
            raise ValueError("max_batch must be >= 1")
