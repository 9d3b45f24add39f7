"""Run the guidance service: python -m splatforge_server [--port N]."""

import argparse

import uvicorn

from splatforge_server.app import create_app
from splatforge_server.config import ServerConfig


def main():
    parser = argparse.ArgumentParser(description="splatforge guidance service")
    parser.add_argument("--host", default="127.0.0.1")
    parser.add_argument("--port", type=int, default=None)
    parser.add_argument("--model-2d", default=None)
    parser.add_argument("--model-3d", default=None)
    parser.add_argument("--max-batch", type=int, default=None)
    args = parser.parse_args()

    config = ServerConfig.from_env()
    if args.port is not None:
        config.port = args.port
    if args.model_2d:
        config.model_2d = args.model_2d
    if args.model_3d:
        config.model_3d = args.model_3d
    if args.max_batch:
        config.max_batch = args.max_batch

    uvicorn.run(create_app(config), host=args.host, port=config.port)


if __name__ == "__main__":
    main()
