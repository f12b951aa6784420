#include "lexdrift/reference.hpp"

namespace lexdrift::reference {

FrequencyTable count_frequencies_serial(const Corpus& corpus, const TokenRules& rules) {
  FrequencyTable table;
  for (const auto& doc : corpus.documents()) {
    for (const auto& token : tokenize(doc.text, rules)) table.add(token, 1.0);
  }
  return table;
}

}  // namespace lexdrift::reference
