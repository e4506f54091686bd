/// Character-shape class shared by rare and unseen words: initial capital,
/// all digits, and the lowercased suffix of up to three characters.
///
/// `Zygote` → `<UNK-C-ote>`, `1999` → `<UNK-D>`, `ox` → `<UNK-ox>`.
pub fn signature(word: &str) -> String {
    let mut sig = String::from("<UNK");
    if word.chars().next().is_some_and(char::is_uppercase) {
        sig.push_str("-C");
    }
    if !word.is_empty() && word.chars().all(|c| c.is_ascii_digit()) {
        sig.push_str("-D");
    } else {
        let chars: Vec<char> = word.chars().collect();
        let suffix: String = chars[chars.len().saturating_sub(3)..].iter().collect();
        if !suffix.is_empty() {
            sig.push('-');
            sig.push_str(&suffix.to_lowercase());
        }
    }
    sig.push('>');
    sig
}

pub fn is_signature(s: &str) -> bool {
    s.starts_with("<UNK") && s.ends_with('>')
}
