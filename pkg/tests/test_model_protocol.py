"""Line protocol round trips, in process and over a real subprocess."""

import io
import json
import sys

import pytest

from tempoprobe.corpus import sample_stream
from tempoprobe.evaluator import evaluate_f1
from tempoprobe.model_protocol import (
    ExternalModel,
    ProtocolError,
    handle_request,
    serve,
)
from tempoprobe.models import train
from tempoprobe.probes import MASK
from tempoprobe.synthetic import make_drift_world


@pytest.fixture(scope="module")
def world():
    return make_drift_world(seed=6, n_subjects=20, examples_per_year=3)


@pytest.fixture(scope="module")
def model(world):
    return train(sample_stream(world.corpus, seed=0), regime="temporal", steps=6000)


@pytest.fixture(scope="module")
def model_file(model, tmp_path_factory):
    path = tmp_path_factory.mktemp("proto") / "model.txt"
    model.save(path)
    return path


class TestHandleRequest:
    def test_score_round_trip(self, world, model):
        query = world.queries[0]
        direct = model.score(query.text, query.year, query.answers[0])
        response = handle_request(
            model,
            {"op": "score", "input": query.text, "year": query.year,
             "target": query.answers[0]},
        )
        assert response == {"log_prob": direct.log_prob, "target_len": direct.target_len}

    def test_predict_round_trip(self, world, model):
        query = world.queries[0]
        direct = model.predict(query.text, query.year, top_n=3)
        response = handle_request(
            model,
            {"op": "predict", "input": query.text, "year": query.year, "top_n": 3},
        )
        assert response == {"ranking": [[a, lp] for a, lp in direct]}

    def test_dist_round_trip(self, world, model):
        query = world.queries[0]
        candidates = list(world.team_pool[:5])
        direct = model.candidate_distribution(query.text, query.year, candidates)
        response = handle_request(
            model,
            {"op": "dist", "input": query.text, "year": query.year,
             "candidates": candidates},
        )
        assert response == {"probs": direct}

    @pytest.mark.parametrize(
        "record,fragment",
        [
            ({"op": "nope", "input": "x", "year": 2010}, "unknown op"),
            ({"input": "x", "year": 2010}, "op"),
            ({"op": "score", "year": 2010, "target": "t"}, "input"),
            ({"op": "score", "input": "x", "year": "2010", "target": "t"}, "year"),
            ({"op": "score", "input": "x", "year": True, "target": "t"}, "year"),
            ({"op": "score", "input": "x", "year": 2010}, "target"),
            ({"op": "dist", "input": "x", "year": 2010, "candidates": "abc"}, "candidates"),
            ({"op": "dist", "input": "x", "year": 2010, "candidates": []}, "candidates"),
            ({"op": "predict", "input": "x", "year": 2010, "top_n": 0}, "top_n"),
        ],
    )
    def test_bad_requests_become_error_records(self, model, record, fragment):
        response = handle_request(model, record)
        assert "error" in response
        assert fragment in response["error"]

    def test_model_exceptions_become_errors(self, model):
        # candidate_distribution rejects an empty candidate list
        response = handle_request(
            model, {"op": "dist", "input": "x", "year": 2010, "candidates": []}
        )
        assert "error" in response


class TestServeLoop:
    def test_serves_multiple_lines_and_survives_errors(self, world, model):
        query = world.queries[0]
        requests = [
            json.dumps({"op": "predict", "input": query.text, "year": query.year}),
            "this is not json",
            "",
            json.dumps({"op": "score", "input": query.text, "year": query.year,
                        "target": query.answers[0]}),
        ]
        stdout = io.StringIO()
        serve(model, io.StringIO("\n".join(requests) + "\n"), stdout)
        lines = stdout.getvalue().splitlines()
        assert len(lines) == 3  # blank line skipped
        assert "ranking" in json.loads(lines[0])
        assert "error" in json.loads(lines[1])
        assert "log_prob" in json.loads(lines[2])


class TestExternalModel:
    def command(self, model_file):
        return [sys.executable, "-m", "tempoprobe.model_protocol", "--model",
                str(model_file)]

    def test_matches_in_process_model_exactly(self, world, model, model_file):
        queries = world.queries[:20]
        with ExternalModel(self.command(model_file)) as external:
            for query in queries:
                direct = model.score(query.text, query.year, query.answers[0])
                via = external.score(query.text, query.year, query.answers[0])
                assert via == direct
            query = queries[0]
            assert external.predict(query.text, query.year, top_n=5) == model.predict(
                query.text, query.year, top_n=5
            )
            candidates = list(world.team_pool[:8])
            assert external.candidate_distribution(
                query.text, query.year, candidates
            ) == model.candidate_distribution(query.text, query.year, candidates)

    def test_drives_the_evaluator(self, world, model, model_file):
        queries = world.queries[:30]
        with ExternalModel(self.command(model_file)) as external:
            via = evaluate_f1(external, queries)
        direct = evaluate_f1(model, queries)
        assert via.per_year == direct.per_year
        assert via.macro == direct.macro

    def test_server_error_raises(self, model_file):
        with ExternalModel(self.command(model_file)) as external:
            with pytest.raises(ProtocolError, match="external model error"):
                external.predict("x", top_n=0, year=2010)
            # stream still usable afterwards
            probe = f"unseen subject works for {MASK}."
            assert external.candidate_distribution(probe, 2010, ["a", "b"]) == [0.5, 0.5]

    def test_dead_process_raises(self):
        external = ExternalModel([sys.executable, "-c", "pass"])
        with pytest.raises(ProtocolError, match="closed the stream"):
            external.score("x", 2010, "y")
        external.close()

    def test_missing_model_file_dies(self, tmp_path):
        external = ExternalModel(
            [sys.executable, "-m", "tempoprobe.model_protocol", "--model",
             str(tmp_path / "absent.txt")]
        )
        with pytest.raises(ProtocolError):
            external.score("x", 2010, "y")
        external.close()
