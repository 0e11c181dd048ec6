"""Seeded synthetic fixtures for end-to-end tests and demos.

The generator mimics a verification protocol: speakers with latent identity
vectors, segments observed through one of two channels (tel/mic) with an
additive per-channel offset, plus isotropic noise.  Two embedding flavors
are produced per segment: a "conventional" one and a cleaner "logit" one
(lower noise, different dimension), so embedding-level and score-level
options can be compared end to end.  Everything is driven by one 64-bit
seed.
"""

from dataclasses import dataclass

import numpy as np

from .embeddings import EmbeddingSet
from .protocol import SegmentMeta, SourceType, Trial, TrialSet

TEL, MIC = SourceType.TEL, SourceType.MIC


@dataclass(frozen=True)
class SynthFixture:
    meta: dict
    trials: TrialSet
    enroll: EmbeddingSet
    test: EmbeddingSet
    enroll_cl: EmbeddingSet
    test_cl: EmbeddingSet
    cohort: EmbeddingSet
    cohort_cl: EmbeddingSet


def _unit(rng, dim):
    v = rng.standard_normal(dim)
    return v / np.linalg.norm(v)


class _SegmentFactory:
    def __init__(self, rng, dim, cl_dim, channel_strength, noise, cl_noise, hotness):
        self.rng = rng
        self.noise = noise
        self.cl_noise = cl_noise
        self.channel_strength = channel_strength
        self.hotness = hotness
        self.dim = dim
        self.cl_dim = cl_dim
        self.channel_dirs = {TEL: _unit(rng, dim), MIC: _unit(rng, dim)}
        self.cl_channel_dirs = {TEL: _unit(rng, cl_dim), MIC: _unit(rng, cl_dim)}
        self.common_dir = _unit(rng, dim)
        self.cl_common_dir = _unit(rng, cl_dim)

    def speaker(self):
        return _unit(self.rng, self.dim), _unit(self.rng, self.cl_dim)

    def segment(self, identity, cl_identity, channel):
        # noise is scaled so its expected norm equals the noise parameter,
        # keeping identity / channel / noise energies comparable across dims
        s = self.channel_strength
        # a per-segment coefficient along a direction shared by every segment
        # shifts that segment's scores against everybody (the offsets s-norm
        # exists to remove); channel normalization cannot touch these
        hot = self.hotness * (1.0 + self.rng.standard_normal())
        vec = (
            identity
            + s * self.channel_dirs[channel]
            + hot * self.common_dir
            + self.noise * self.rng.standard_normal(self.dim) / np.sqrt(self.dim)
        )
        cl_vec = (
            cl_identity
            + s * self.cl_channel_dirs[channel]
            + hot * self.cl_common_dir
            + self.cl_noise
            * self.rng.standard_normal(self.cl_dim)
            / np.sqrt(self.cl_dim)
        )
        return vec, cl_vec


def synth_verification_fixture(
    seed=0,
    n_speakers=30,
    n_test_per_speaker=3,
    dim=32,
    cl_dim=48,
    n_cohort=120,
    channel_strength=0.8,
    noise=0.55,
    cl_noise=0.35,
    hotness=0.0,
):
    """Full protocol fixture: meta, labeled trials (all enroll x test pairs),
    conventional and logit embedding sets, and an impostor cohort."""
    rng = np.random.default_rng(seed)
    factory = _SegmentFactory(
        rng, dim, cl_dim, channel_strength, noise, cl_noise, hotness
    )

    meta = {}

    def make_segments(prefix, speakers, per_speaker):
        ids, vecs, cl_vecs, owner = [], [], [], []
        k = 0
        for spk, (identity, cl_identity) in enumerate(speakers):
            for _ in range(per_speaker):
                channel = TEL if rng.random() < 0.5 else MIC
                seg_id = f"{prefix}{k:05d}"
                vec, cl_vec = factory.segment(identity, cl_identity, channel)
                meta[seg_id] = SegmentMeta(seg_id, channel)
                ids.append(seg_id)
                vecs.append(vec)
                cl_vecs.append(cl_vec)
                owner.append(spk)
                k += 1
        return ids, np.array(vecs), np.array(cl_vecs), owner

    speakers = [factory.speaker() for _ in range(n_speakers)]
    enroll_ids, enroll_m, enroll_cl_m, enroll_spk = make_segments(
        "enr", speakers, 1
    )
    test_ids, test_m, test_cl_m, test_spk = make_segments(
        "tst", speakers, n_test_per_speaker
    )

    cohort_speakers = [factory.speaker() for _ in range(n_cohort)]
    cohort_ids, cohort_m, cohort_cl_m, _ = make_segments(
        "coh", cohort_speakers, 1
    )

    trials = []
    for i, e_id in enumerate(enroll_ids):
        for j, t_id in enumerate(test_ids):
            label = "target" if enroll_spk[i] == test_spk[j] else "nontarget"
            trials.append(Trial(e_id, t_id, label))
    trial_set = TrialSet(tuple(trials)).with_channel_pairs(meta)

    return SynthFixture(
        meta=meta,
        trials=trial_set,
        enroll=EmbeddingSet(tuple(enroll_ids), enroll_m),
        test=EmbeddingSet(tuple(test_ids), test_m),
        enroll_cl=EmbeddingSet(tuple(enroll_ids), enroll_cl_m),
        test_cl=EmbeddingSet(tuple(test_ids), test_cl_m),
        cohort=EmbeddingSet(tuple(cohort_ids), cohort_m),
        cohort_cl=EmbeddingSet(tuple(cohort_ids), cohort_cl_m),
    )


def synthetic_llr_scores(n_target, n_nontarget, separation=2.0, seed=0):
    """Scores that are exact log-likelihood ratios of their own generator.

    Targets ~ N(mu, 2 mu) and nontargets ~ N(-mu, 2 mu) make the identity
    map perfectly calibrated: llr(x) = x.  Returns (scores, labels).
    """
    rng = np.random.default_rng(seed)
    mu = separation
    sigma = np.sqrt(2.0 * mu)
    tar = rng.normal(mu, sigma, n_target)
    non = rng.normal(-mu, sigma, n_nontarget)
    scores = np.concatenate([tar, non])
    labels = np.zeros(scores.size, dtype=bool)
    labels[:n_target] = True
    return scores, labels
