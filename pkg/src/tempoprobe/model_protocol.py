"""JSONL line protocol for plugging external models into the evaluators.

Requests are one JSON object per line:

    {"op": "score",   "input": ..., "year": ..., "target": ...}
    {"op": "predict", "input": ..., "year": ..., "top_n": ...}   # top_n optional
    {"op": "dist",    "input": ..., "year": ..., "candidates": [...]}

Responses mirror them:

    {"log_prob": float, "target_len": int}
    {"ranking": [[answer, log_prob], ...]}
    {"probs": [float, ...]}
    {"error": "message"}          # the server keeps serving after errors

`python -m tempoprobe.model_protocol --model FILE` serves a saved count
model over stdin/stdout; ExternalModel is the matching subprocess client,
exposing the same score/predict/candidate_distribution surface as the
in-process models.
"""

from __future__ import annotations

import argparse
import json
import subprocess
import sys
from typing import IO, Sequence

from tempoprobe.metrics import SpanScore
from tempoprobe.models import TemporalCountModel


class ProtocolError(RuntimeError):
    """Raised when the other end of the protocol misbehaves."""


def handle_request(model, record: dict) -> dict:
    """Answer one decoded request against a model. Never raises for bad
    requests; returns an error record instead."""
    try:
        op = record["op"]
        input_text = record["input"]
        year = record["year"]
        if not isinstance(input_text, str):
            raise ValueError("input must be a string")
        if not isinstance(year, int) or isinstance(year, bool):
            raise ValueError("year must be an integer")
        if op == "score":
            target = record["target"]
            if not isinstance(target, str):
                raise ValueError("target must be a string")
            span = model.score(input_text, year, target)
            return {"log_prob": span.log_prob, "target_len": span.target_len}
        if op == "predict":
            top_n = record.get("top_n")
            if top_n is not None and (not isinstance(top_n, int) or top_n < 1):
                raise ValueError("top_n must be a positive integer")
            ranking = model.predict(input_text, year, top_n=top_n)
            return {"ranking": [[answer, log_prob] for answer, log_prob in ranking]}
        if op == "dist":
            candidates = record["candidates"]
            if not isinstance(candidates, list) or not all(
                isinstance(c, str) for c in candidates
            ):
                raise ValueError("candidates must be a list of strings")
            return {"probs": model.candidate_distribution(input_text, year, candidates)}
        raise ValueError(f"unknown op {op!r}")
    except KeyError as exc:
        return {"error": f"missing field {exc.args[0]!r}"}
    except Exception as exc:
        return {"error": str(exc)}


def serve(model, stdin: IO[str], stdout: IO[str]) -> None:
    """Serve requests line by line until EOF."""
    for line in stdin:
        line = line.strip()
        if not line:
            continue
        try:
            record = json.loads(line)
        except json.JSONDecodeError as exc:
            response = {"error": f"bad request line: {exc}"}
        else:
            response = handle_request(model, record)
        stdout.write(json.dumps(response) + "\n")
        stdout.flush()


class ExternalModel:
    """Client for a model served over the line protocol by a subprocess.

    Usable anywhere a count model is: the evaluators only touch
    score/predict/candidate_distribution.
    """

    def __init__(self, command: Sequence[str]):
        self.command = list(command)
        self.proc = subprocess.Popen(
            self.command,
            stdin=subprocess.PIPE,
            stdout=subprocess.PIPE,
            text=True,
        )

    def _call(self, record: dict) -> dict:
        if self.proc.stdin is None or self.proc.stdout is None:
            raise ProtocolError("external model process has no pipes")
        try:
            self.proc.stdin.write(json.dumps(record) + "\n")
            self.proc.stdin.flush()
        except (BrokenPipeError, OSError) as exc:
            raise ProtocolError(f"external model is gone: {exc}") from exc
        line = self.proc.stdout.readline()
        if not line:
            code = self.proc.poll()
            raise ProtocolError(f"external model closed the stream (exit code {code})")
        try:
            response = json.loads(line)
        except json.JSONDecodeError as exc:
            raise ProtocolError(f"bad response line: {exc}") from exc
        if "error" in response:
            raise ProtocolError(f"external model error: {response['error']}")
        return response

    def score(self, input_text: str, year: int, target: str) -> SpanScore:
        response = self._call(
            {"op": "score", "input": input_text, "year": year, "target": target}
        )
        return SpanScore(
            log_prob=float(response["log_prob"]),
            target_len=int(response["target_len"]),
        )

    def predict(
        self, input_text: str, year: int, top_n: int | None = None
    ) -> list[tuple[str, float]]:
        record: dict = {"op": "predict", "input": input_text, "year": year}
        if top_n is not None:
            record["top_n"] = top_n
        response = self._call(record)
        return [(answer, float(log_prob)) for answer, log_prob in response["ranking"]]

    def candidate_distribution(
        self, input_text: str, year: int, candidates: Sequence[str]
    ) -> list[float]:
        response = self._call(
            {"op": "dist", "input": input_text, "year": year, "candidates": list(candidates)}
        )
        return [float(p) for p in response["probs"]]

    def close(self) -> None:
        if self.proc.poll() is None:
            if self.proc.stdin is not None:
                self.proc.stdin.close()
            self.proc.wait(timeout=10)

    def __enter__(self) -> "ExternalModel":
        return self

    def __exit__(self, *exc_info) -> None:
        self.close()


def main(argv: Sequence[str] | None = None) -> int:
    parser = argparse.ArgumentParser(
        prog="tempoprobe-model-protocol",
        description="Serve a saved count model over the JSONL line protocol.",
    )
    parser.add_argument("--model", required=True, help="saved count model file")
    args = parser.parse_args(argv)
    model = TemporalCountModel.load(args.model)
    serve(model, sys.stdin, sys.stdout)
    return 0


if __name__ == "__main__":
    sys.exit(main())
