//! Scenario files shipped with the binary.

pub const BUNDLED: [(&str, &str); 6] = [
    ("table1_p50", include_str!("../scenarios/table1_p50.json")),
    ("table1_p200", include_str!("../scenarios/table1_p200.json")),
    ("table2_p50", include_str!("../scenarios/table2_p50.json")),
    ("table2_p200", include_str!("../scenarios/table2_p200.json")),
    ("table3_p50", include_str!("../scenarios/table3_p50.json")),
    ("table3_p200", include_str!("../scenarios/table3_p200.json")),
];

pub fn bundled(name: &str) -> Option<&'static str> {
    BUNDLED.iter().find(|(n, _)| *n == name).map(|(_, s)| *s)
}
