use unicode_normalization::UnicodeNormalization;

/// Normalised transcript used to match parallel recordings: NFC, lowercase,
/// everything except letters, digits, apostrophes and whitespace removed,
/// whitespace collapsed to single spaces.
pub fn content_key(transcript: &str) -> String {
    let cleaned: String = transcript
        .nfc()
        .flat_map(char::to_lowercase)
        .map(|c| if c.is_whitespace() { ' ' } else { c })
        .filter(|&c| c == ' ' || c == '\'' || c.is_alphanumeric())
        .collect();
    cleaned.split_whitespace().collect::<Vec<_>>().join(" ")
}

/// Words of a normalised transcript.
pub fn words(transcript: &str) -> Vec<String> {
    content_key(transcript)
        .split(' ')
        .filter(|w| !w.is_empty())
        .map(str::to_owned)
        .collect()
}
