from pathlib import Path

from proto_eval import annotations as A
from proto_eval import splits as S
from proto_eval.cli import main
from proto_eval.types import DetectionSet

from conftest import det, manifest, obj, record

FIXTURES = Path(__file__).resolve().parents[1] / "fixtures"

RECT_XML = """<annotation>
  <filename>{name}.jpg</filename>
  <size><width>1920</width><height>1080</height></size>
  <object>
    <name>mdf</name>
    <bndbox><xmin>10</xmin><ymin>20</ymin><xmax>110</xmax><ymax>220</ymax></bndbox>
  </object>
</annotation>
"""


def write_small_dataset(tmp_path, n_images=4):
    images = [record("a", [obj(0, 0, 0, 10, 10)]), record("b"),
              record("c", [obj(0, 20, 20, 40, 40)]), record("d")][:n_images]
    m = manifest(images)
    manifest_path = tmp_path / "manifest.json"
    manifest_path.write_text(A.serialize_manifest(m))
    det_sets = [
        DetectionSet("a", (det(0, 0, 0, 10, 10, 1.0),)),
        DetectionSet("b"),
        DetectionSet("c", (det(0, 20, 20, 40, 40, 1.0),)),
        DetectionSet("d"),
    ][:n_images]
    detections_path = tmp_path / "detections.json"
    detections_path.write_text(A.serialize_detections(det_sets))
    return manifest_path, detections_path


class TestConvert:
    def test_directory_of_three_files(self, tmp_path, capsys):
        src = tmp_path / "labels"
        src.mkdir()
        for name in ("img1", "img2", "img3"):
            (src / f"{name}.xml").write_text(RECT_XML.format(name=name))
        out = tmp_path / "manifest.json"
        assert main(["convert", str(src), "--format", "rect-xml", "--out", str(out)]) == 0
        m = A.parse_manifest(out.read_text())
        assert len(m.images) == 3
        assert m.class_names == ("mdf",)
        assert "3 images" in capsys.readouterr().out

    def test_malformed_file_fails_closed(self, tmp_path, capsys):
        src = tmp_path / "labels"
        src.mkdir()
        (src / "good.xml").write_text(RECT_XML.format(name="good"))
        (src / "bad.xml").write_text("<annotation><object>")
        out = tmp_path / "manifest.json"
        assert main(["convert", str(src), "--format", "rect-xml", "--out", str(out)]) == 1
        assert not out.exists()
        assert "bad.xml" in capsys.readouterr().err

    def test_partial_keeps_good_files(self, tmp_path):
        src = tmp_path / "labels"
        src.mkdir()
        (src / "good.xml").write_text(RECT_XML.format(name="good"))
        (src / "bad.xml").write_text("<annotation><object>")
        out = tmp_path / "manifest.json"
        code = main(["convert", str(src), "--format", "rect-xml",
                     "--out", str(out), "--partial"])
        assert code == 0
        assert len(A.parse_manifest(out.read_text()).images) == 1

    def test_empty_directory_gives_empty_manifest(self, tmp_path, capsys):
        src = tmp_path / "labels"
        src.mkdir()
        out = tmp_path / "manifest.json"
        assert main(["convert", str(src), "--format", "rect-xml", "--out", str(out)]) == 0
        assert A.parse_manifest(out.read_text()).images == ()
        assert "warning" in capsys.readouterr().err

    def test_normalized_labels(self, tmp_path):
        src = tmp_path / "labels"
        src.mkdir()
        (src / "frame1.txt").write_text("0 0.5 0.5 1.0 1.0\n")
        (src / "frame2.txt").write_text("")
        out = tmp_path / "manifest.json"
        code = main(["convert", str(src), "--format", "normalized", "--out", str(out),
                     "--class-names", "mdf", "--image-size", "1920x1080",
                     "--source", "capture_system"])
        assert code == 0
        m = A.parse_manifest(out.read_text())
        assert m.images[0].objects[0].box.as_tuple() == (0, 0, 1920, 1080)
        assert m.images[1].is_negative

    def test_normalized_requires_size_and_classes(self, tmp_path):
        src = tmp_path / "labels"
        src.mkdir()
        out = tmp_path / "manifest.json"
        assert main(["convert", str(src), "--format", "normalized",
                     "--out", str(out)]) == 64


class TestSplitAndAccount:
    def test_split_then_account(self, tmp_path):
        manifest_path, _ = write_small_dataset(tmp_path)
        split_path = tmp_path / "split.tsv"
        code = main(["split", str(manifest_path), "--ratios", "0.5", "0.25", "0.25",
                     "--seed", "7", "--out", str(split_path)])
        assert code == 0
        account_path = tmp_path / "accounting.csv"
        code = main(["account", str(manifest_path), str(split_path),
                     "--out", str(account_path)])
        assert code == 0
        lines = account_path.read_text().splitlines()
        assert lines[0].startswith("split,images")
        assert lines[4].startswith("total,4,")

    def test_split_is_deterministic(self, tmp_path):
        manifest_path, _ = write_small_dataset(tmp_path)
        out1, out2 = tmp_path / "s1.tsv", tmp_path / "s2.tsv"
        for out in (out1, out2):
            main(["split", str(manifest_path), "--ratios", "0.5", "0.25", "0.25",
                  "--seed", "3", "--out", str(out)])
        assert out1.read_text() == out2.read_text()

    def test_stratify_and_grouping_flags(self, tmp_path):
        manifest_path, _ = write_small_dataset(tmp_path)
        out = tmp_path / "split.tsv"
        code = main(["split", str(manifest_path), "--ratios", "0.5", "0.25", "0.25",
                     "--seed", "1", "--stratify", "--group-by-capture",
                     "--out", str(out)])
        assert code == 0
        assert len(out.read_text().splitlines()) == 4

    def test_bad_ratio_sum_is_usage_error(self, tmp_path):
        manifest_path, _ = write_small_dataset(tmp_path)
        code = main(["split", str(manifest_path), "--ratios", "0.5", "0.5", "0.5",
                     "--out", str(tmp_path / "s.tsv")])
        assert code == 64

    def test_account_with_matching_expectation(self, tmp_path):
        manifest_path, _ = write_small_dataset(tmp_path)
        split_path = tmp_path / "split.tsv"
        split_path.write_text("a\ttraining\nb\ttraining\nc\tvalidation\nd\ttest\n")
        expected = tmp_path / "expected.csv"
        expected.write_text("split,images\ntraining,2\nvalidation,1\ntest,1\ntotal,4\n")
        code = main(["account", str(manifest_path), str(split_path),
                     "--out", str(tmp_path / "acc.csv"), "--expected", str(expected)])
        assert code == 0

    def test_account_discrepancy_exit_code(self, tmp_path, capsys):
        manifest_path, _ = write_small_dataset(tmp_path)
        split_path = tmp_path / "split.tsv"
        split_path.write_text("a\ttraining\nb\ttraining\nc\tvalidation\nd\ttest\n")
        expected = tmp_path / "expected.csv"
        expected.write_text("split,images\ntraining,3\n")
        code = main(["account", str(manifest_path), str(split_path),
                     "--out", str(tmp_path / "acc.csv"), "--expected", str(expected)])
        assert code == 2
        assert "discrepancy" in capsys.readouterr().out


class TestEvaluate:
    def test_fixture_matches_oracle_report(self, tmp_path):
        out = tmp_path / "report.csv"
        code = main(["evaluate", str(FIXTURES / "eval_small" / "manifest.json"),
                     str(FIXTURES / "eval_small" / "detections.json"),
                     "--out", str(out)])
        assert code == 0
        expected = (FIXTURES / "eval_small" / "expected_report.csv").read_text()
        assert out.read_text() == expected

    def test_self_evaluation_is_perfect(self, tmp_path, capsys):
        manifest_path, detections_path = write_small_dataset(tmp_path)
        out = tmp_path / "report.csv"
        code = main(["evaluate", str(manifest_path), str(detections_path),
                     "--out", str(out)])
        assert code == 0
        stdout = capsys.readouterr().out
        assert "mAP @ 0.5 IoU" in stdout and "1.000" in stdout
        lines = out.read_text().splitlines()
        assert lines[2] == "mAP,0.5,1.000,2,2,2,0"
        assert lines[4] == "mAP,0.75,1.000,2,2,2,0"

    def test_idempotent_artifacts(self, tmp_path):
        manifest_path, detections_path = write_small_dataset(tmp_path)
        out1, out2 = tmp_path / "r1.csv", tmp_path / "r2.csv"
        for out in (out1, out2):
            main(["evaluate", str(manifest_path), str(detections_path), "--out", str(out)])
        assert out1.read_bytes() == out2.read_bytes()

    def test_unknown_image_id_listed(self, tmp_path, capsys):
        manifest_path, _ = write_small_dataset(tmp_path)
        detections_path = tmp_path / "bad_dets.json"
        detections_path.write_text(A.serialize_detections(
            [DetectionSet("ghost", (det(0, 0, 0, 10, 10, 0.9),))]))
        out = tmp_path / "report.csv"
        code = main(["evaluate", str(manifest_path), str(detections_path),
                     "--out", str(out)])
        assert code == 1
        assert "ghost" in capsys.readouterr().err
        code = main(["evaluate", str(manifest_path), str(detections_path),
                     "--out", str(out), "--ignore-missing"])
        assert code == 0

    def test_bad_threshold_flag_is_usage_error(self, tmp_path):
        manifest_path, detections_path = write_small_dataset(tmp_path)
        code = main(["evaluate", str(manifest_path), str(detections_path),
                     "--out", str(tmp_path / "r.csv"), "--iou-thresholds", "0.5,nope"])
        assert code == 64

    def test_eleven_point_interpolation_flag(self, tmp_path):
        manifest_path, detections_path = write_small_dataset(tmp_path)
        out = tmp_path / "report.csv"
        code = main(["evaluate", str(manifest_path), str(detections_path),
                     "--out", str(out), "--interpolation", "eleven"])
        assert code == 0
        assert out.read_text().splitlines()[2] == "mAP,0.5,1.000,2,2,2,0"

    def test_pr_curve_export(self, tmp_path):
        manifest_path, detections_path = write_small_dataset(tmp_path)
        curves = tmp_path / "curves.csv"
        main(["evaluate", str(manifest_path), str(detections_path),
              "--out", str(tmp_path / "r.csv"), "--pr-curves", str(curves)])
        assert curves.read_text().startswith("class,iou_threshold,confidence,recall,precision")


class TestImageEval:
    def test_fixture_summary(self, tmp_path):
        out = tmp_path / "summary.csv"
        code = main(["image-eval", str(FIXTURES / "eval_small" / "manifest.json"),
                     str(FIXTURES / "eval_small" / "detections.json"),
                     "--out", str(out)])
        assert code == 0
        expected = (FIXTURES / "eval_small" / "expected_image_summary.csv").read_text()
        assert out.read_text() == expected

    def test_per_image_report_and_policy(self, tmp_path):
        manifest_path, detections_path = write_small_dataset(tmp_path)
        out = tmp_path / "summary.csv"
        per_image = tmp_path / "per_image.csv"
        code = main(["image-eval", str(manifest_path), str(detections_path),
                     "--out", str(out), "--per-image", str(per_image),
                     "--policy", "localized:0.5"])
        assert code == 0
        assert out.read_text().splitlines()[1] == "mdf,2,0,2,0,1.000,1.000,1.000"
        assert len(per_image.read_text().splitlines()) == 5

    def test_bad_policy_is_usage_error(self, tmp_path):
        manifest_path, detections_path = write_small_dataset(tmp_path)
        code = main(["image-eval", str(manifest_path), str(detections_path),
                     "--out", str(tmp_path / "s.csv"), "--policy", "somewhere"])
        assert code == 64


class TestLedger:
    def test_four_model_fixtures(self, tmp_path):
        out = tmp_path / "ledger.csv"
        configs = [str(FIXTURES / "training" / f"model_{m}.json") for m in "abcd"]
        assert main(["ledger", *configs, "--out", str(out)]) == 0
        lines = out.read_text().splitlines()
        assert lines[1] == "A,400000,321,1243,16,"
        assert lines[2] == "B,294000,14700,20,9,0.0449"
        assert lines[3] == "C,400000,463,863,16,"
        assert lines[4] == "D,154000,11000,14,6.5,0.0791"

    def test_empty_config_list(self, tmp_path):
        out = tmp_path / "ledger.csv"
        assert main(["ledger", "--out", str(out)]) == 0
        assert out.read_text().splitlines() == [
            "model,steps,epochs,steps_per_epoch,wall_hours,final_avg_loss"]

    def test_invalid_config_fails(self, tmp_path):
        bad = tmp_path / "bad.json"
        bad.write_text('{"model_label": "X"}')
        assert main(["ledger", str(bad), "--out", str(tmp_path / "l.csv")]) == 1


class TestUsage:
    def test_no_command(self):
        assert main([]) == 64

    def test_unknown_command(self):
        assert main(["frobnicate"]) == 64

    def test_missing_input_file(self, tmp_path):
        assert main(["evaluate", str(tmp_path / "nope.json"),
                     str(tmp_path / "nope2.json"), "--out", str(tmp_path / "r.csv")]) == 1
