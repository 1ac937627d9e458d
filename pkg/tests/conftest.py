import pytest

from ansambl import fixtures
from ansambl.vocal_analysis import AnalysisConfig, build_voice_profile


@pytest.fixture(scope="session")
def analysis_config():
    return AnalysisConfig()


@pytest.fixture(scope="session")
def calibration_clips():
    return fixtures.make_calibration_clips(n_per_label=4, seed=7)


@pytest.fixture(scope="session")
def gate_profile(calibration_clips, analysis_config):
    profile, _ = build_voice_profile(calibration_clips, analysis_config)
    return profile


@pytest.fixture(scope="session")
def corpus_dir(tmp_path_factory):
    """Singleton-cell corpus with measured fields persisted in the manifest."""
    from ansambl.sample_library import ingest_manifest, load_manifest, save_manifest

    d = tmp_path_factory.mktemp("corpus")
    manifest = fixtures.write_sample_corpus(d, per_cell=1, seed=11)
    measured = ingest_manifest(load_manifest(manifest), d)
    save_manifest(measured, manifest)
    return d


@pytest.fixture(scope="session")
def ingested_samples(corpus_dir):
    from ansambl.sample_library import load_manifest

    return load_manifest(corpus_dir / "manifest.json")


@pytest.fixture(scope="session")
def profile_path(tmp_path_factory, gate_profile):
    p = tmp_path_factory.mktemp("profile") / "profile.json"
    gate_profile.save(p)
    return p


@pytest.fixture()
def engine_config(corpus_dir, profile_path):
    """Builder for a ready-to-run EngineConfig over the fixture corpus."""
    from ansambl.config import EngineConfig

    def make(**overrides):
        return EngineConfig(manifest_path=corpus_dir / "manifest.json",
                            profile_path=profile_path, **overrides)

    return make


SONG_PHRASES = [(205.0, 0.8), (313.0, 1.6), (627.0, 0.8), (313.0, 3.5)]


@pytest.fixture(scope="session")
def song_path(tmp_path_factory):
    from ansambl.wav_io import write_mono_pcm16

    d = tmp_path_factory.mktemp("song")
    song = fixtures.make_song(SONG_PHRASES, gap_s=1.5, amplitude=0.5)
    p = d / "song.wav"
    write_mono_pcm16(p, song, 48_000)
    return p
