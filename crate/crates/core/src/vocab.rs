//! Word pools for generated groups.

/// Single-word adjectives used as attribute names. None collides with a
/// template keyword.
pub const ADJECTIVES: &[&str] = &[
    "green", "blue", "cold", "rough", "young", "nice", "red", "white", "big", "small", "round",
    "kind", "quiet", "smart", "furry", "heavy", "bright", "calm", "clever", "curious", "dull",
    "eager", "fancy", "fierce", "gentle", "glad", "grumpy", "happy", "hollow", "humble", "jolly",
    "keen", "lazy", "loud", "lucky", "mellow", "merry", "mighty", "modest", "narrow", "noble",
    "odd", "plain", "polite", "proud", "quick", "rapid", "rare", "rich", "ripe", "rusty", "sad",
    "salty", "sharp", "shiny", "short", "shy", "silent", "silly", "simple", "sleepy", "slim",
    "slow", "smooth", "soft", "solid", "sour", "spicy", "steady", "sticky", "stiff", "strong",
    "sunny", "sweet", "swift", "tall", "tame", "tender", "thick", "thin", "tidy", "tiny", "tough",
    "vast", "warm", "weak", "wet", "wide", "wild", "wise", "witty", "zany", "agile", "bold",
    "brave", "busy", "cheap", "clean", "crisp", "dark", "dry", "early", "empty", "fair", "fast",
    "firm", "fresh", "full", "grand", "harsh", "hot", "icy", "late", "light", "loyal", "mild",
    "neat", "new", "old", "pale", "pink", "purple", "yellow", "orange", "brown", "gray",
];

/// Capitalized names used as the group's single entity.
pub const NAMES: &[&str] = &[
    "Anne", "Bob", "Charlie", "Dave", "Erin", "Fiona", "Gary", "Harry", "Ivy", "Jack", "Kate",
    "Liam", "Mona", "Nina", "Oscar", "Paul", "Quinn", "Rosa", "Sam", "Tina", "Uma", "Victor",
    "Wendy", "Xavier", "Yara", "Zoe",
];
