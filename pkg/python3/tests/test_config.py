"""Test python3/packages/heer/config.py"""

import os
import shutil
import tempfile
import unittest

from python3.packages.heer.config import (
    TrainConfig,
    config_hash,
    from_mapping,
    load_config,
    read_config,
)
from python3.packages.heer.errors import ConfigError, HeerError


# pylint: disable=missing-function-docstring
class TestTrainConfig(unittest.TestCase):
    """Defaults and validation"""

    def test_defaults(self):
        config = TrainConfig().validate()
        self.assertEqual((config.d_v, config.d_h, config.k), (256, 128, 5))
        self.assertEqual(config.lr, 10.0)
        self.assertEqual((config.rescale, config.batch_size), (0.1, 50))
        self.assertEqual(config.noise_alpha, 0.75)
        self.assertIsNone(config.samples_per_epoch)
        self.assertFalse(config.freeze_metrics)
        self.assertEqual(config.grad_clip, 1.0)

    def test_invalid_values(self):
        cases = [
            {"d_v": 7},
            {"d_v": 0},
            {"k": -1},
            {"lr": 0.0},
            {"rescale": -1.0},
            {"batch_size": 0},
            {"epochs": -1},
            {"samples_per_epoch": 0},
            {"workers": 0},
            {"noise_alpha": -0.5},
            {"pretrain_min_lr": 1.0},
            {"dtype": "float16"},
            {"logit_l2": -1.0},
            {"logit_l2": 0.0},
            {"grad_clip": 0.0},
            {"grad_clip": -1.0},
            {"seed": -1},
        ]
        for changes in cases:
            with self.subTest(changes=changes), self.assertRaises(ConfigError):
                TrainConfig().updated(**changes)

    def test_config_error_is_a_heer_error(self):
        with self.assertRaises(HeerError) as cm:
            TrainConfig(d_v=3).validate()
        self.assertEqual(cm.exception.module, "config")

    def test_updated_leaves_the_original(self):
        base = TrainConfig()
        changed = base.updated(k=2)
        self.assertEqual((base.k, changed.k), (5, 2))


class TestFromMapping(unittest.TestCase):
    """Raw and typed values keyed by field name or alias"""

    def test_aliases(self):
        config = from_mapping({"dim": "16", "neg": "3", "batch": "8", "alpha": "0.5"})
        self.assertEqual((config.d_v, config.k, config.batch_size), (16, 3, 8))
        self.assertEqual(config.noise_alpha, 0.5)

    def test_dashes_are_underscores(self):
        config = from_mapping({"samples-per-epoch": "100", "pretrain-epochs": 2})
        self.assertEqual((config.samples_per_epoch, config.pretrain_epochs), (100, 2))

    def test_unknown_key(self):
        with self.assertRaises(ConfigError) as cm:
            from_mapping({"learning_rate": "1"})
        self.assertIn("learning_rate", str(cm.exception))

    def test_coercion(self):
        config = from_mapping(
            {
                "freeze_metrics": "yes",
                "samples_per_epoch": "none",
                "lr": "'2.5'",
                "dtype": '"float32"',
                "checkpoint_dir": "/tmp/ckpt",
                "grad_clip": "none",
            }
        )
        self.assertTrue(config.freeze_metrics)
        self.assertIsNone(config.samples_per_epoch)
        self.assertEqual(config.lr, 2.5)
        self.assertEqual(config.dtype, "float32")
        self.assertEqual(config.checkpoint_dir, "/tmp/ckpt")
        self.assertIsNone(config.grad_clip)
        self.assertFalse(from_mapping({"freeze_metrics": "off"}).freeze_metrics)

    def test_bad_values(self):
        for values in ({"dim": "many"}, {"freeze_metrics": "maybe"}, {"lr": "fast"}):
            with self.subTest(values=values), self.assertRaises(ConfigError):
                from_mapping(values)

    def test_result_is_validated(self):
        with self.assertRaises(ConfigError):
            from_mapping({"dim": "9"})


class TestConfigFiles(unittest.TestCase):
    """key=value files and precedence"""

    def setUp(self):
        self.tmpdir = tempfile.mkdtemp()

    def tearDown(self):
        shutil.rmtree(self.tmpdir)

    def write(self, text):
        path = os.path.join(self.tmpdir, "heer.conf")
        with open(path, "w", encoding="utf-8") as config_file:
            config_file.write(text)
        return path

    def test_read_config(self):
        path = self.write("dim=32\nneg=4\nlr='5'\n")
        self.assertEqual(read_config(path), {"dim": "32", "neg": "4", "lr": "'5'"})

    def test_duplicate_key(self):
        with self.assertRaises(ConfigError):
            read_config(self.write("dim=32\ndim=64\n"))

    def test_missing_file(self):
        with self.assertRaises(ConfigError) as cm:
            read_config(os.path.join(self.tmpdir, "absent.conf"))
        self.assertIn("cannot read", str(cm.exception))

    def test_precedence(self):
        path = self.write("dim=32\nneg=4\nepochs=3\n")
        config = load_config(path, {"k": 7})
        self.assertEqual((config.d_v, config.k, config.epochs), (32, 7, 3))
        self.assertEqual(config.batch_size, 50)
        self.assertEqual(load_config(), TrainConfig())


class TestConfigHash(unittest.TestCase):
    """Stable digest"""

    def test_stable_and_short(self):
        digest = config_hash(TrainConfig())
        self.assertEqual(digest, config_hash(TrainConfig()))
        self.assertEqual(len(digest), 16)
        int(digest, 16)

    def test_changes_with_any_field(self):
        base = config_hash(TrainConfig())
        self.assertNotEqual(base, config_hash(TrainConfig(seed=1)))
        self.assertNotEqual(base, config_hash(TrainConfig(freeze_metrics=True)))


if __name__ == "__main__":
    unittest.main()
