#include "slt/anchors.hpp"

namespace slt {

namespace {

struct Entry {
  const char* word;
  const char* tag;
};

// Most-frequent Penn tag for a small core vocabulary. Anything missing falls
// through to the suffix rules in pos_tag.
constexpr Entry kEntries[] = {
    // determiners, pronouns, prepositions, conjunctions
    {"the", "DT"}, {"a", "DT"}, {"an", "DT"}, {"this", "DT"}, {"that", "DT"}, {"these", "DT"},
    {"those", "DT"}, {"every", "DT"}, {"each", "DT"}, {"some", "DT"}, {"any", "DT"},
    {"no", "DT"}, {"all", "DT"}, {"both", "DT"}, {"another", "DT"},
    {"i", "PRP"}, {"you", "PRP"}, {"he", "PRP"}, {"she", "PRP"}, {"it", "PRP"}, {"we", "PRP"},
    {"they", "PRP"}, {"me", "PRP"}, {"him", "PRP"}, {"her", "PRP$"}, {"us", "PRP"},
    {"them", "PRP"}, {"my", "PRP$"}, {"your", "PRP$"}, {"his", "PRP$"}, {"its", "PRP$"},
    {"our", "PRP$"}, {"their", "PRP$"}, {"myself", "PRP"}, {"yourself", "PRP"},
    {"themselves", "PRP"}, {"who", "WP"}, {"what", "WP"}, {"which", "WDT"}, {"whom", "WP"},
    {"whose", "WP$"}, {"when", "WRB"}, {"where", "WRB"}, {"why", "WRB"}, {"how", "WRB"},
    {"in", "IN"}, {"on", "IN"}, {"at", "IN"}, {"of", "IN"}, {"for", "IN"}, {"with", "IN"},
    {"from", "IN"}, {"by", "IN"}, {"about", "IN"}, {"into", "IN"}, {"over", "IN"},
    {"under", "IN"}, {"after", "IN"}, {"before", "IN"}, {"between", "IN"}, {"through", "IN"},
    {"during", "IN"}, {"without", "IN"}, {"against", "IN"}, {"because", "IN"}, {"if", "IN"},
    {"than", "IN"}, {"since", "IN"}, {"while", "IN"}, {"until", "IN"}, {"like", "IN"},
    {"to", "TO"}, {"and", "CC"}, {"or", "CC"}, {"but", "CC"}, {"nor", "CC"}, {"so", "RB"},
    {"not", "RB"}, {"n't", "RB"}, {"very", "RB"}, {"also", "RB"}, {"just", "RB"},
    {"now", "RB"}, {"then", "RB"}, {"there", "EX"}, {"here", "RB"}, {"today", "NN"},
    {"tomorrow", "NN"}, {"yesterday", "NN"}, {"always", "RB"}, {"never", "RB"},
    {"often", "RB"}, {"again", "RB"}, {"still", "RB"}, {"already", "RB"}, {"too", "RB"},
    {"really", "RB"}, {"quickly", "RB"}, {"slowly", "RB"}, {"well", "RB"}, {"out", "RP"},
    {"up", "RP"}, {"down", "RP"}, {"off", "RP"}, {"away", "RB"}, {"back", "RB"},
    // modals and auxiliaries
    {"can", "MD"}, {"could", "MD"}, {"will", "MD"}, {"would", "MD"}, {"shall", "MD"},
    {"should", "MD"}, {"may", "MD"}, {"might", "MD"}, {"must", "MD"}, {"'ll", "MD"},
    {"be", "VB"}, {"is", "VBZ"}, {"am", "VBP"}, {"are", "VBP"}, {"was", "VBD"},
    {"were", "VBD"}, {"been", "VBN"}, {"being", "VBG"}, {"'s", "VBZ"}, {"'re", "VBP"},
    {"'m", "VBP"}, {"have", "VBP"}, {"has", "VBZ"}, {"had", "VBD"}, {"'ve", "VBP"},
    {"do", "VBP"}, {"does", "VBZ"}, {"did", "VBD"}, {"done", "VBN"},
    // adjectives
    {"good", "JJ"}, {"bad", "JJ"}, {"big", "JJ"}, {"small", "JJ"}, {"new", "JJ"}, {"old", "JJ"},
    {"first", "JJ"}, {"last", "JJ"}, {"long", "JJ"}, {"great", "JJ"}, {"little", "JJ"},
    {"other", "JJ"}, {"right", "JJ"}, {"high", "JJ"}, {"different", "JJ"}, {"large", "JJ"},
    {"next", "JJ"}, {"early", "JJ"}, {"young", "JJ"}, {"important", "JJ"}, {"few", "JJ"},
    {"public", "JJ"}, {"same", "JJ"}, {"able", "JJ"}, {"cold", "JJ"}, {"hot", "JJ"},
    {"warm", "JJ"}, {"happy", "JJ"}, {"sad", "JJ"}, {"deaf", "JJ"}, {"many", "JJ"},
    {"more", "JJR"}, {"most", "JJS"}, {"better", "JJR"}, {"best", "JJS"}, {"worse", "JJR"},
    {"worst", "JJS"}, {"bigger", "JJR"}, {"biggest", "JJS"}, {"windy", "JJ"},
    // nouns
    {"time", "NN"}, {"person", "NN"}, {"people", "NNS"}, {"year", "NN"}, {"day", "NN"},
    {"week", "NN"}, {"month", "NN"}, {"thing", "NN"}, {"man", "NN"}, {"men", "NNS"},
    {"woman", "NN"}, {"women", "NNS"}, {"child", "NN"}, {"children", "NNS"}, {"world", "NN"},
    {"life", "NN"}, {"hand", "NN"}, {"part", "NN"}, {"eye", "NN"}, {"place", "NN"},
    {"case", "NN"}, {"point", "NN"}, {"government", "NN"}, {"company", "NN"},
    {"number", "NN"}, {"group", "NN"}, {"problem", "NN"}, {"fact", "NN"}, {"family", "NN"},
    {"school", "NN"}, {"house", "NN"}, {"home", "NN"}, {"city", "NN"}, {"country", "NN"},
    {"state", "NN"}, {"water", "NN"}, {"food", "NN"}, {"book", "NN"}, {"car", "NN"},
    {"tree", "NN"}, {"dog", "NN"}, {"cat", "NN"}, {"bird", "NN"}, {"fish", "NN"},
    {"snow", "NN"}, {"rain", "NN"}, {"sun", "NN"}, {"wind", "NN"}, {"weather", "NN"},
    {"winter", "NN"}, {"summer", "NN"}, {"spring", "NN"}, {"night", "NN"}, {"morning", "NN"},
    {"evening", "NN"}, {"friend", "NN"}, {"teacher", "NN"}, {"student", "NN"},
    {"doctor", "NN"}, {"news", "NN"}, {"story", "NN"}, {"word", "NN"}, {"name", "NN"},
    {"sign", "NN"}, {"language", "NN"}, {"video", "NN"}, {"money", "NN"}, {"job", "NN"},
    {"work", "NN"}, {"storm", "NN"}, {"hurricane", "NN"}, {"death", "NN"}, {"toll", "NN"},
    {"response", "NN"}, {"community", "NN"}, {"street", "NN"}, {"road", "NN"},
    {"mat", "NN"}, {"room", "NN"}, {"door", "NN"}, {"table", "NN"}, {"phone", "NN"},
    {"question", "NN"}, {"answer", "NN"}, {"idea", "NN"}, {"power", "NN"}, {"war", "NN"},
    // verbs
    {"go", "VB"}, {"goes", "VBZ"}, {"went", "VBD"}, {"gone", "VBN"}, {"going", "VBG"},
    {"get", "VB"}, {"got", "VBD"}, {"make", "VB"}, {"made", "VBD"}, {"know", "VB"},
    {"knew", "VBD"}, {"known", "VBN"}, {"think", "VBP"}, {"thought", "VBD"}, {"take", "VB"},
    {"took", "VBD"}, {"taken", "VBN"}, {"see", "VB"}, {"saw", "VBD"}, {"seen", "VBN"},
    {"come", "VB"}, {"came", "VBD"}, {"want", "VBP"}, {"look", "VB"}, {"use", "VB"},
    {"find", "VB"}, {"found", "VBD"}, {"give", "VB"}, {"gave", "VBD"}, {"given", "VBN"},
    {"tell", "VB"}, {"told", "VBD"}, {"say", "VBP"}, {"said", "VBD"}, {"says", "VBZ"},
    {"ask", "VB"}, {"feel", "VBP"}, {"felt", "VBD"}, {"try", "VB"}, {"leave", "VB"},
    {"left", "VBD"}, {"call", "VB"}, {"keep", "VB"}, {"kept", "VBD"}, {"let", "VB"},
    {"begin", "VB"}, {"began", "VBD"}, {"help", "VB"}, {"show", "VB"}, {"hear", "VB"},
    {"heard", "VBD"}, {"play", "VB"}, {"run", "VB"}, {"ran", "VBD"}, {"move", "VB"},
    {"live", "VB"}, {"believe", "VBP"}, {"bring", "VB"}, {"brought", "VBD"}, {"write", "VB"},
    {"wrote", "VBD"}, {"sit", "VB"}, {"sat", "VBD"}, {"stand", "VB"}, {"stood", "VBD"},
    {"lose", "VB"}, {"lost", "VBD"}, {"pay", "VB"}, {"paid", "VBD"}, {"meet", "VB"},
    {"met", "VBD"}, {"walk", "VB"}, {"eat", "VB"}, {"ate", "VBD"}, {"drink", "VB"},
    {"sleep", "VB"}, {"read", "VB"}, {"learn", "VB"}, {"open", "VB"}, {"close", "VB"},
    {"buy", "VB"}, {"bought", "VBD"}, {"sell", "VB"}, {"sold", "VBD"}, {"fall", "VB"},
    {"falls", "VBZ"}, {"fell", "VBD"}, {"rise", "VB"}, {"drive", "VB"}, {"swim", "VB"},
    {"jump", "VB"}, {"fly", "VB"}, {"sing", "VB"}, {"dance", "VB"}, {"cook", "VB"},
    {"remain", "VB"}, {"reach", "VB"}, {"freeze", "VB"},
};

}  // namespace

const Lexicon& Lexicon::builtin() {
  static const Lexicon lex = [] {
    Lexicon l;
    for (const Entry& e : kEntries) l.add(e.word, e.tag);
    return l;
  }();
  return lex;
}

}  // namespace slt
