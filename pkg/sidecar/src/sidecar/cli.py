from __future__ import annotations

import argparse
import sys
from typing import Optional

import uvicorn

from .app import create_app
from .config import CAPABILITIES, SidecarConfig


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="textguard-sidecar",
        description="Backend inference service: /v1/predict, /v1/mlm, /v1/translate.",
    )
    parser.add_argument("--mode", choices=("real", "stub"), default="stub")
    parser.add_argument("--host", default="127.0.0.1")
    parser.add_argument("--port", type=int, default=8200)
    parser.add_argument("--capabilities", default=",".join(CAPABILITIES),
                        help="comma-separated subset of predict,mlm,translate")
    parser.add_argument("--max-batch", type=int, default=64)
    parser.add_argument("--predict-model")
    parser.add_argument("--mlm-model")
    parser.add_argument("--translate-model-out")
    parser.add_argument("--translate-model-back")
    return parser


def config_from_args(args) -> SidecarConfig:
    overrides = {
        key: value
        for key, value in (
            ("predict_model", args.predict_model),
            ("mlm_model", args.mlm_model),
            ("translate_model_out", args.translate_model_out),
            ("translate_model_back", args.translate_model_back),
        )
        if value
    }
    return SidecarConfig(
        mode=args.mode,
        host=args.host,
        port=args.port,
        capabilities=tuple(c.strip() for c in args.capabilities.split(",") if c.strip()),
        max_batch=args.max_batch,
        **overrides,
    )


def main(argv: Optional[list[str]] = None) -> int:
    args = build_parser().parse_args(argv)
    try:
        config = config_from_args(args)
        app = create_app(config)
    except (ValueError, RuntimeError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    uvicorn.run(app, host=config.host, port=config.port, log_level="info")
    return 0


if __name__ == "__main__":
    sys.exit(main())
