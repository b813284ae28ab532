"""
Unit tests for settings module
"""

import json

import pytest

from src.config.settings import OUTPUT_DIR_ENV, Settings


class TestSettings:
    """Test cases for Settings class"""

    @pytest.fixture(autouse=True)
    def isolated(self, tmp_path, monkeypatch):
        monkeypatch.chdir(tmp_path)
        monkeypatch.delenv(OUTPUT_DIR_ENV, raising=False)
        self.path = tmp_path / "test_config.json"

    def test_default_settings(self):
        """Test default configuration loading"""
        settings = Settings(config_path=str(self.path))

        assert settings.pld_resolution == 1e-4
        assert settings.default_delta == 1e-5
        assert settings.budget_points == [0.5, 1.0, 2.0, 4.0, 8.0]
        assert settings.output_dir == "output"

    def test_custom_settings(self):
        """Test custom configuration loading"""
        self.path.write_text(json.dumps({"pld_resolution": 1e-3, "grid_size": 1025}))

        settings = Settings(config_path=str(self.path))

        assert settings.pld_resolution == 1e-3
        assert settings.grid_size == 1025
        assert settings.tail_knots == 32

    def test_unknown_keys_ignored(self):
        self.path.write_text(json.dumps({"pld_order": 2}))
        settings = Settings(config_path=str(self.path))
        with pytest.raises(AttributeError):
            settings.pld_order

    def test_broken_file_falls_back_to_defaults(self):
        self.path.write_text("{oops")
        assert Settings(config_path=str(self.path)).grid_size == 4097

    def test_defaults_are_not_shared(self):
        settings = Settings(config_path=str(self.path))
        settings.budget_points.append(16.0)
        assert Settings.DEFAULTS["budget_points"] == [0.5, 1.0, 2.0, 4.0, 8.0]

    def test_output_dir_from_environment(self, monkeypatch):
        monkeypatch.setenv(OUTPUT_DIR_ENV, "elsewhere")
        assert Settings(config_path=str(self.path)).output_dir == "elsewhere"

    def test_default_file_name(self):
        assert Settings().config_path == "dpledger.json"


if __name__ == "__main__":
    pytest.main([__file__, "-v"])
