"""Run the sidecar: ``python -m sim_sidecar [--port 9100] [--backend auto]``."""

import argparse
import os

import uvicorn

from .service import create_app


def main() -> None:
    parser = argparse.ArgumentParser(description="caption-pair similarity sidecar")
    parser.add_argument("--host", default=os.environ.get("SIM_SIDECAR_HOST", "127.0.0.1"))
    parser.add_argument("--port", type=int,
                        default=int(os.environ.get("SIM_SIDECAR_PORT", "9100")))
    parser.add_argument("--backend", choices=["auto", "hash", "sbert"],
                        default=os.environ.get("SIM_SIDECAR_BACKEND", "auto"),
                        help="auto tries the pinned checkpoints, then falls back to "
                             "the deterministic hash embedder")
    args = parser.parse_args()
    uvicorn.run(create_app(backend_kind=args.backend), host=args.host, port=args.port)


if __name__ == "__main__":
    main()
