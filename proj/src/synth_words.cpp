#include "dnsxray/synth.hpp"

namespace dnsxray {

namespace {

constexpr std::string_view kBenignWords[] = {
    "apple", "river", "cloud", "stone", "green", "market", "forest", "garden", "planet", "silver", "bright",
    "ocean", "summer", "winter", "spring", "autumn", "travel", "music", "photo", "video", "story", "paper",
    "pencil", "bridge", "castle", "harbor", "island", "meadow", "valley", "mountain", "desert", "coffee",
    "bakery", "pizza", "kitchen", "recipe", "health", "fitness", "doctor", "clinic", "school", "college",
    "library", "museum", "theater", "cinema", "ticket", "hotel", "airline", "flight", "train", "metro",
    "bike", "motor", "garage", "rental", "estate", "realty", "mortgage", "bank", "credit", "wallet", "money",
    "trade", "stock", "invest", "fund", "budget", "office", "work", "career", "job", "talent", "design",
    "studio", "pixel", "media", "news", "daily", "weekly", "times", "herald", "journal", "press", "radio",
    "channel", "stream", "sport", "soccer", "tennis", "golf", "running", "yoga", "outdoor", "camping",
    "fishing", "hunting", "flower", "plant", "seed", "farm", "fresh", "organic", "natural", "pet", "dog",
    "cat", "puppy", "kitten", "horse", "bird", "animal", "zoo", "nature", "science", "physics", "chemistry",
    "biology", "math", "code", "data", "server", "network", "secure", "shield", "guard", "home", "house",
    "living", "decor", "furniture", "light", "lamp", "window", "door", "floor", "paint", "color", "art",
    "gallery", "craft", "maker", "build", "tool", "hardware", "software", "app", "mobile", "phone", "tablet",
    "laptop", "device", "smart", "digital", "online", "web", "site", "portal", "hub", "center", "point",
    "line", "link", "connect", "share", "social", "friend", "family", "baby", "kids", "child", "parent",
    "mother", "father", "wedding", "party", "event", "concert", "festival", "game", "play", "toy", "puzzle",
    "chess", "card", "board", "sports", "league", "team", "club", "fan", "shop", "store", "mall", "outlet",
    "deal", "sale", "price", "offer", "cart", "order", "express", "delivery", "post", "mail", "parcel",
    "box", "pack", "ship", "cargo", "freight", "logistics", "energy", "solar", "power", "water", "climate",
    "weather", "eco", "earth", "global", "world", "local", "city", "town", "village", "county", "state",
    "nation", "union", "europe", "america", "asia", "africa", "nordic", "alpine", "coast", "beach", "sunset",
    "sunrise", "star", "moon", "galaxy", "space", "rocket", "alpha", "beta", "delta", "omega", "prime",
    "nova", "vista", "summit", "peak", "crest", "anchor", "compass", "atlas", "map", "guide", "learn",
    "teach", "class", "course", "lesson", "skill", "expert", "master", "academy", "institute", "research",
    "lab", "insight", "focus", "vision", "wisdom", "value", "trust", "honest", "simple", "clear", "fast",
    "quick", "rapid", "swift", "easy", "happy", "lucky", "golden", "royal",
};

constexpr std::string_view kCharterWords[] = {
    "people", "union", "justice", "domestic", "tranquility", "common", "defence", "general", "welfare",
    "liberty", "posterity", "ordain", "establish", "constitution", "congress", "senate", "house",
    "representatives", "legislative", "powers", "granted", "vested", "member", "chosen", "every", "second",
    "year", "several", "states", "electors", "qualifications", "requisite", "numerous", "branch", "state",
    "legislature", "person", "attained", "age", "twenty", "five", "years", "seven", "citizen", "inhabitant",
    "shall", "direct", "taxes", "apportioned", "among", "which", "included", "within", "according",
    "respective", "numbers", "determined", "adding", "whole", "free", "persons", "including", "those",
    "bound", "service", "term", "excluding", "indians", "taxed", "three", "fifths", "actual", "enumeration",
    "made", "after", "first", "meeting", "subsequent", "manner", "law", "thousand", "each", "have", "least",
    "until", "such", "entitled", "choose", "vacancies", "happen", "representation", "executive", "authority",
    "issue", "writs", "election", "fill", "speaker", "officers", "sole", "power", "impeachment", "composed",
    "senators", "thereof", "six", "vote", "immediately", "assembled", "consequence", "divided", "equally",
    "classes", "seats", "expiration", "president", "tempore", "absence", "exercise", "office", "trial",
    "oath", "affirmation", "chief", "presiding", "concurrence", "judgment", "cases", "extend", "removal",
    "disqualification", "hold", "enjoy", "honor", "profit", "party", "convicted", "nevertheless", "liable",
    "subject", "indictment", "punishment", "times", "places", "holding", "prescribed", "alter",
    "regulations", "except", "assemble", "once", "december", "appoint", "different", "majority", "quorum",
    "business", "smaller", "adjourn", "compel", "attendance", "absent", "members", "penalties", "determine",
    "rules", "proceedings", "punish", "disorderly", "behavior", "expel", "journal", "publish", "secrecy",
    "yeas", "nays", "desire", "present", "entered", "neither", "consent", "compensation", "ascertained",
    "paid", "treasury", "privileged", "arrest", "treason", "felony", "breach", "peace", "debate", "speech",
    "questioned", "civil", "appointed", "created", "emoluments", "increased", "continuance", "revenue",
    "originate", "propose", "amendments", "bill", "passed", "become", "approve", "sign", "return",
    "objections", "reconsideration", "agree", "together", "sent", "likewise",
};

} // namespace

std::span<const std::string_view> benign_words() { return kBenignWords; }
std::span<const std::string_view> charter_words() { return kCharterWords; }

} // namespace dnsxray
