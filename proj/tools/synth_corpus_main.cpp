// consensus-dx-synth: writes a deterministic toy corpus for offline runs
// with the synthetic provider.

#include <iostream>

#include "CLI11.hpp"
#include "consensus_dx/errors.hpp"
#include "consensus_dx/synthetic.hpp"

using namespace consensus_dx;

int main(int argc, char** argv) {
  CLI::App app{"Write a synthetic annotated corpus (JSON lines)", "consensus-dx-synth"};
  std::string out;
  SyntheticCorpusOptions o;
  app.add_option("--out", out, "Output corpus path")->required();
  app.add_option("--notes", o.notes, "Number of notes");
  app.add_option("--meds", o.medications_per_note, "Medications per note");
  app.add_option("--note-chars", o.note_chars, "Minimum note length in characters");
  app.add_option("--seed", o.seed, "Generator seed");
  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return 2;
  }
  try {
    const auto corpus = make_synthetic_corpus(o);
    save_corpus(corpus, out);
    std::cout << "wrote " << corpus.notes().size() << " notes, " << corpus.pairs().size() << " pairs to " << out
              << '\n';
    return 0;
  } catch (const ValidationError& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 2;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 1;
  }
}
