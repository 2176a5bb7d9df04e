#pragma once

// Umbrella header for the offline library. The live engine and server live
// under qsynth/live/ and are included separately (they pull in threads and
// Boost.Beast).

#include "qsynth/audio.hpp"
#include "qsynth/error.hpp"
#include "qsynth/io/patch_json.hpp"
#include "qsynth/io/sim_params_json.hpp"
#include "qsynth/io/trace_file.hpp"
#include "qsynth/io/wav.hpp"
#include "qsynth/pipeline.hpp"
#include "qsynth/presets.hpp"
#include "qsynth/rng.hpp"
#include "qsynth/signal_cond.hpp"
#include "qsynth/synth/patch.hpp"
#include "qsynth/synth/render.hpp"
#include "qsynth/synth/voice.hpp"
#include "qsynth/trace.hpp"
#include "qsynth/trace_sim.hpp"
