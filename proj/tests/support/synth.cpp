#include "synth.hpp"

#include <chrono>

#include "mailtopics/textprep.hpp"

namespace synth {

using mailtopics::CleanDocument;
using mailtopics::RawEmail;

const std::vector<std::vector<std::string>>& family_words() {
  static const std::vector<std::vector<std::string>> words{
      {"račun", "faktura", "uplata", "iznos", "dugovanje", "opomena", "plaćanje", "pretplata", "zaduženje",
       "popust", "dinara", "naplata"},
      {"internet", "ruter", "brzina", "veza", "signal", "modem", "optika", "kabl", "mreža", "prekid", "wifi",
       "konekcija"},
      {"televizija", "kanal", "program", "daljinski", "prijemnik", "slika", "emisija", "snimanje", "paket",
       "sportski", "filmovi", "ekran"},
      {"telefon", "sim", "kartica", "roming", "poziv", "poruka", "minuti", "tarifa", "broj", "aparat",
       "dopuna", "operater"},
  };
  return words;
}

const std::vector<std::string>& shared_words() {
  static const std::vector<std::string> words{"poštovani", "molim", "pomoć", "hvala", "danas", "ugovor",
                                              "korisnik", "problem", "juče", "odmah"};
  return words;
}

std::string family_text(int family, int words, Rng& rng) {
  const auto& vocab = family_words().at(static_cast<std::size_t>(family));
  std::string text;
  for (int i = 0; i < words; ++i) {
    if (!text.empty()) text += ' ';
    text += rng.pick(vocab);
  }
  return text;
}

mailtopics::Timestamp at(int year, unsigned month, unsigned day, int hour) {
  using namespace std::chrono;
  return sys_days{year_month_day{std::chrono::year{year}, std::chrono::month{month}, std::chrono::day{day}}} +
         hours{hour};
}

BlobCorpus blob_corpus(int families, int per_family, std::uint64_t seed, int noise) {
  Rng rng(seed);
  BlobCorpus c;
  const auto add = [&](std::string id, std::string text, int family) {
    RawEmail e;
    e.id = std::move(id);
    e.from_addr = "korisnik" + std::to_string(c.emails.size() % 97) + "@mail.example";
    e.to_addrs = {"podrska@operator.example"};
    e.body = text;
    e.received_at = at(2024, 5, 1) + std::chrono::minutes(static_cast<long>(c.emails.size()));
    CleanDocument d;
    d.email_id = e.id;
    d.text = mailtopics::textprep::normalize(text);
    d.word_count = mailtopics::textprep::count_words(d.text);
    d.token_count = d.word_count;
    c.emails.push_back(std::move(e));
    c.docs.push_back(std::move(d));
    c.family.push_back(family);
  };
  for (int i = 0; i < per_family; ++i) {
    for (int f = 0; f < families; ++f) {
      const int own = 8 + static_cast<int>(rng.below(5));
      const int shared = 2 + static_cast<int>(rng.below(3));
      std::string text = family_text(f, own, rng);
      for (int s = 0; s < shared; ++s) text += ' ' + rng.pick(shared_words());
      add("blob-" + std::to_string(f) + "-" + std::to_string(i), std::move(text), f);
    }
  }
  const int all = static_cast<int>(family_words().size());
  for (int i = 0; i < noise; ++i) {
    std::string text;
    for (int f = 0; f < all; ++f) text += (text.empty() ? "" : " ") + family_text(f, 2, rng);
    text += ' ' + rng.pick(shared_words());
    add("noise-" + std::to_string(i), std::move(text), -1);
  }
  return c;
}

ServiceCorpus service_corpus(std::size_t n, std::uint64_t seed) {
  Rng rng(seed);
  ServiceCorpus c;
  const std::vector<std::string> internal{"podrska@operator.example", "naplata@operator.example",
                                          "NOC@operator.example"};
  const std::vector<std::string> automated{
      "Automatski odgovor: nisam u kancelariji do ponedeljka, hvala na razumevanju.",
      "Out of office: I am away until Monday with limited access to email.",
      "Delivery Status Notification (Failure) mail delivery failed permanently for the recipient.",
  };
  const std::vector<std::string> english{
      "Hello, I would like to ask about the invoice I received last month for my home internet connection. "
      "The amount is much higher than usual and I do not understand why. Could you please check it?",
      "Dear support team, my television service has not been working since yesterday evening and the "
      "screen only shows a message that there is no signal. Please send someone to fix it as soon as possible.",
  };
  for (std::size_t i = 0; i < n; ++i) {
    RawEmail e;
    e.id = "svc-" + std::to_string(i);
    e.from_addr = "korisnik" + std::to_string(i % 97) + "@mail.example";
    e.to_addrs = {"podrska@operator.example"};
    e.received_at = at(2024, 5, 1) + std::chrono::minutes(static_cast<long>(i));
    const std::size_t kind = i % 20;
    if (kind == 3) {
      e.from_addr = internal[i % internal.size()];
      e.subject = "Interno";
      e.body = family_text(static_cast<int>(i % 4), 10, rng);
      c.internal_ids.push_back(e.id);
    } else if (kind == 7) {
      e.subject = "";
      e.body = automated[i % automated.size()];
      c.automated_ids.push_back(e.id);
    } else if (kind == 11) {
      e.subject = "Question";
      e.body = english[i % english.size()];
      c.english_ids.push_back(e.id);
    } else if (kind == 15) {
      e.subject = "";
      e.body = "-----Original Message-----\nFrom: someone\nPoštovani, " + family_text(0, 8, rng);
      c.empty_ids.push_back(e.id);
    } else {
      const int f = static_cast<int>(rng.below(4));
      e.subject = rng.pick(family_words()[static_cast<std::size_t>(f)]);
      e.body = "Poštovani, " + family_text(f, 8 + static_cast<int>(rng.below(6)), rng) + " " +
               rng.pick(shared_words()) + ". Srdačan pozdrav, PER";
    }
    c.emails.push_back(std::move(e));
  }
  return c;
}

std::string random_mixed_script(Rng& rng, std::size_t max_len) {
  static const std::vector<std::string> pieces{
      "а", "б", "в", "г", "д", "ђ", "е", "ж", "з", "и", "ј", "к", "л", "љ", "м", "н", "њ", "о", "п", "р",
      "с", "т", "ћ", "у", "ф", "х", "ц", "ч", "џ", "ш", "А", "Б", "В", "Г", "Д", "Ђ", "Е", "Ж", "З", "И",
      "Ј", "К", "Л", "Љ", "М", "Н", "Њ", "О", "П", "Р", "С", "Т", "Ћ", "У", "Ф", "Х", "Ц", "Ч", "Џ", "Ш",
      "a", "b", "c", "č", "ć", "d", "đ", "e", "z", "ž", "L", "J", "N", "D", "Ž", "Š", " ", " ", ".", ",",
      "1", "7", "!", "ы", "щ", "є", "ї", "ѓ", "ќ", "ѕ", "😀", "中", "\n", "-", "Ѣ", "ӂ"};
  std::string s;
  const std::size_t len = rng.below(max_len + 1);
  for (std::size_t i = 0; i < len; ++i) s += rng.pick(pieces);
  return s;
}

}  // namespace synth
