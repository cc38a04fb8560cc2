import pytest
from hypothesis import given
import hypothesis.strategies as st

from proto_eval import training as T
from proto_eval.errors import ParseError, ValidationError

# The four reported model setups (labels A-D).
MODEL_CONFIGS = {
    "A": T.TrainingConfig(
        model_label="A", framework_label="region-proposal", learning_rate=1e-6,
        batch_size=1, n_training_images=1243, max_steps=400_000,
        resolution_policy="min 600 / max 1024 vertical", confidence_threshold=0.5),
    "B": T.TrainingConfig(
        model_label="B", framework_label="single-shot", learning_rate=1e-3,
        batch_size=64, subdivisions=16, n_training_images=1243,
        resolution_policy="fit within 416x416", confidence_threshold=0.5),
    "C": T.TrainingConfig(
        model_label="C", framework_label="region-proposal", learning_rate=1e-6,
        batch_size=1, n_training_images=863, max_steps=400_000,
        resolution_policy="min 600 / max 1024 vertical", confidence_threshold=0.5),
    "D": T.TrainingConfig(
        model_label="D", framework_label="single-shot", learning_rate=1e-3,
        batch_size=64, subdivisions=16, n_training_images=863,
        resolution_policy="fit within 416x416", confidence_threshold=0.5),
}


class TestStepArithmetic:
    @pytest.mark.parametrize("n_images,batch,expected", [
        (1243, 1, 1243),   # model A
        (1243, 64, 20),    # model B: ceil(19.42)
        (863, 1, 863),     # model C
        (863, 64, 14),     # model D: ceil(13.48)
    ])
    def test_steps_per_epoch(self, n_images, batch, expected):
        assert T.steps_per_epoch(n_images, batch) == expected

    def test_steps_per_epoch_rejects_zero(self):
        with pytest.raises(ValidationError):
            T.steps_per_epoch(0, 1)
        with pytest.raises(ValidationError):
            T.steps_per_epoch(10, 0)

    @pytest.mark.parametrize("steps,per_epoch,expected", [
        (400_000, 1243, 321),  # model A
        (400_000, 863, 463),   # model C
        (0, 17, 0),
    ])
    def test_epochs_from_steps(self, steps, per_epoch, expected):
        assert T.epochs_from_steps(steps, per_epoch) == expected

    @pytest.mark.parametrize("epochs,per_epoch,expected", [
        (14_700, 20, 294_000),  # model B
        (11_000, 14, 154_000),  # model D
        (1, 1, 1),
    ])
    def test_steps_from_epochs(self, epochs, per_epoch, expected):
        assert T.steps_from_epochs(epochs, per_epoch) == expected

    def test_step_counter_overflow(self):
        with pytest.raises(ValidationError, match="64-bit"):
            T.steps_from_epochs(2**40, 2**30)

    @given(epochs=st.integers(1, 10**6), per_epoch=st.integers(1, 10**4))
    def test_epoch_step_roundtrip(self, epochs, per_epoch):
        assert T.epochs_from_steps(T.steps_from_epochs(epochs, per_epoch), per_epoch) == epochs

    @given(n_images=st.integers(1, 10**5))
    def test_batch_one_is_identity(self, n_images):
        assert T.steps_per_epoch(n_images, 1) == n_images


class TestTrainingConfig:
    def test_subdivisions_must_divide_batch(self):
        with pytest.raises(ValidationError, match="subdivisions"):
            T.TrainingConfig(
                model_label="X", framework_label="f", learning_rate=0.1,
                batch_size=10, subdivisions=3, n_training_images=5,
                resolution_policy="", confidence_threshold=0.5)

    def test_learning_rate_positive(self):
        with pytest.raises(ValidationError):
            T.TrainingConfig(
                model_label="X", framework_label="f", learning_rate=0.0,
                batch_size=1, n_training_images=5,
                resolution_policy="", confidence_threshold=0.5)

    def test_config_document_roundtrip(self):
        run = T.RunSummary(epochs_trained=14_700, wall_hours=9.0, final_avg_loss=0.0449)
        text = T.serialize_training_config(MODEL_CONFIGS["B"], run)
        config, parsed_run = T.parse_training_config(text)
        assert config == MODEL_CONFIGS["B"]
        assert parsed_run == run

    def test_run_requires_exactly_one_of_steps_epochs(self):
        with pytest.raises(ValidationError):
            T.RunSummary(steps_trained=1, epochs_trained=1)
        with pytest.raises(ValidationError):
            T.RunSummary(wall_hours=2.0)

    def test_parse_rejects_unknown_keys(self):
        with pytest.raises(ParseError, match="unknown"):
            T.parse_training_config('{"model_label": "A", "momentum": 0.9}')


class TestLedger:
    def test_reported_run_figures(self):
        rows = {
            "A": T.derive_ledger_row(MODEL_CONFIGS["A"],
                                     T.RunSummary(steps_trained=400_000, wall_hours=16.0)),
            "B": T.derive_ledger_row(MODEL_CONFIGS["B"],
                                     T.RunSummary(epochs_trained=14_700, wall_hours=9.0,
                                                  final_avg_loss=0.0449)),
            "C": T.derive_ledger_row(MODEL_CONFIGS["C"],
                                     T.RunSummary(steps_trained=400_000, wall_hours=16.0)),
            "D": T.derive_ledger_row(MODEL_CONFIGS["D"],
                                     T.RunSummary(epochs_trained=11_000, wall_hours=6.5,
                                                  final_avg_loss=0.0791)),
        }
        assert [rows[k].steps_per_epoch for k in "ABCD"] == [1243, 20, 863, 14]
        assert rows["A"].epochs == 321
        assert rows["C"].epochs == 463
        assert rows["B"].steps == 294_000
        assert rows["D"].steps == 154_000

    def test_row_without_run(self):
        row = T.derive_ledger_row(MODEL_CONFIGS["A"], None)
        assert row.steps is None and row.epochs is None
        assert row.steps_per_epoch == 1243

    def test_ledger_csv(self):
        row = T.derive_ledger_row(MODEL_CONFIGS["B"],
                                  T.RunSummary(epochs_trained=14_700, wall_hours=9.0,
                                               final_avg_loss=0.0449))
        text = T.ledger_csv([row])
        assert text.splitlines() == [
            "model,steps,epochs,steps_per_epoch,wall_hours,final_avg_loss",
            "B,294000,14700,20,9,0.0449",
        ]

    def test_empty_ledger(self):
        assert T.ledger_csv([]).splitlines() == [
            "model,steps,epochs,steps_per_epoch,wall_hours,final_avg_loss",
        ]
