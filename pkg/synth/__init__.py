from synth.perturb import Perturbation, dropped_types, perturb_targets
from synth.roundtrip import RoundtripResult, SceneOutcome, format_ap_table, run_roundtrip, run_scene, scene_targets
from synth.scenes import SceneSpec, generate_scene
from synth.streams import derive_seed, stream
