// Generates a small synthetic corpus, runs every method and prints an
// ablation-style table.

#include <iostream>

#include "zslice/synth.hpp"
#include "zslice/tables.hpp"

int main() {
    using namespace zslice;

    synth::Params params;
    params.clutter_rate = 0.2;
    params.dropout = 0.1;
    const auto corpus = synth::generate_corpus(42, params, 25);
    const Corpus detections = corpus.detections();
    const Corpus truth = corpus.truth();

    std::vector<tables::MethodRow> rows;
    for (Mode m : {Mode::baseline, Mode::bytetrack, Mode::bidirectional, Mode::hybrid, Mode::spatiotemporal}) {
        MethodConfig config;
        config.mode = m;
        rows.push_back({config, evaluate(run_mode(detections, config), truth).corpus});
    }
    tables::write_methods(std::cout, rows);
}
