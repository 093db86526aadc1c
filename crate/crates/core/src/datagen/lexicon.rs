//! Deterministic pseudo-words, person names and a fixed city table.

use rand::seq::SliceRandom;
use rand::Rng;

const SYLLABLES: [&str; 24] = [
    "ka", "lo", "mi", "ren", "sa", "tu", "vel", "no", "ri", "dan", "po", "li", "mar", "ze", "qui",
    "bo", "fen", "ta", "gor", "hi", "jun", "wes", "ya", "cor",
];

/// `count` distinct three-syllable words in a seeded order.
pub fn pseudo_words(count: usize, rng: &mut impl Rng) -> Vec<String> {
    let n = SYLLABLES.len();
    let mut idx: Vec<usize> = (0..n * n * n).collect();
    idx.shuffle(rng);
    idx.into_iter()
        .take(count)
        .map(|k| format!("{}{}{}", SYLLABLES[k / (n * n)], SYLLABLES[(k / n) % n], SYLLABLES[k % n]))
        .collect()
}

const FIRST: [&str; 40] = [
    "Ada", "Ben", "Cora", "Dario", "Elena", "Felix", "Greta", "Hugo", "Iris", "Jonas", "Kira", "Leo",
    "Maya", "Nico", "Olga", "Pavel", "Quinn", "Rosa", "Sami", "Tara", "Umar", "Vera", "Wade",
    "Xenia", "Yusuf", "Zoe", "Amir", "Bea", "Cyril", "Dina", "Emil", "Fay", "Gil", "Hana", "Ivo",
    "June", "Kai", "Lena", "Milo", "Nora",
];

const ACCENTED: [(&str, &str); 6] = [
    ("Elena", "Eléna"),
    ("Jonas", "Jonás"),
    ("Zoe", "Zoë"),
    ("Emil", "Émil"),
    ("Ivo", "Ívo"),
    ("Rosa", "Rosá"),
];

/// Distinct "First Last" names with invented surnames.
pub fn person_names(count: usize, rng: &mut impl Rng) -> Vec<String> {
    let n = SYLLABLES.len();
    let mut seen = std::collections::HashSet::new();
    let mut out = Vec::with_capacity(count);
    while out.len() < count {
        let first = FIRST[rng.random_range(0..FIRST.len())];
        let parts = rng.random_range(2..=3);
        let mut last = String::new();
        for _ in 0..parts {
            last.push_str(SYLLABLES[rng.random_range(0..n)]);
        }
        let mut c = last.chars();
        let last: String = c.next().map(|h| h.to_ascii_uppercase()).into_iter().chain(c).collect();
        let name = format!("{first} {last}");
        if seen.insert(name.to_lowercase()) {
            out.push(name);
        }
    }
    out
}

/// How a Twitter display name differs from the platform name.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum NameVariant {
    Same,
    Lowercase,
    MiddleInitial,
    Accented,
}

pub fn name_variant(name: &str, variant: NameVariant, rng: &mut impl Rng) -> String {
    match variant {
        NameVariant::Same => name.to_string(),
        NameVariant::Lowercase => name.to_lowercase(),
        NameVariant::MiddleInitial => {
            let mut parts = name.split(' ');
            let first = parts.next().unwrap_or_default();
            let rest: Vec<&str> = parts.collect();
            let initial = (b'A' + rng.random_range(0..26u8)) as char;
            format!("{first} {initial}. {}", rest.join(" "))
        }
        NameVariant::Accented => {
            let first = name.split(' ').next().unwrap_or_default();
            match ACCENTED.iter().find(|(plain, _)| *plain == first) {
                Some((plain, accented)) => name.replacen(plain, accented, 1),
                None => name.to_string(),
            }
        }
    }
}

/// (name, latitude, longitude, weight)
pub const CITIES: [(&str, f64, f64, f64); 40] = [
    ("New York, NY", 40.7128, -74.0060, 84.0),
    ("Los Angeles, CA", 34.0522, -118.2437, 39.0),
    ("Chicago, IL", 41.8781, -87.6298, 27.0),
    ("Houston, TX", 29.7604, -95.3698, 22.0),
    ("Phoenix, AZ", 33.4484, -112.0740, 16.0),
    ("Philadelphia, PA", 39.9526, -75.1652, 15.0),
    ("San Antonio, TX", 29.4241, -98.4936, 14.0),
    ("San Diego, CA", 32.7157, -117.1611, 14.0),
    ("Dallas, TX", 32.7767, -96.7970, 13.0),
    ("San Jose, CA", 37.3382, -121.8863, 10.0),
    ("Austin, TX", 30.2672, -97.7431, 9.0),
    ("Jacksonville, FL", 30.3322, -81.6557, 9.0),
    ("San Francisco, CA", 37.7749, -122.4194, 9.0),
    ("Columbus, OH", 39.9612, -82.9988, 8.0),
    ("Indianapolis, IN", 39.7684, -86.1581, 8.0),
    ("Seattle, WA", 47.6062, -122.3321, 7.0),
    ("Denver, CO", 39.7392, -104.9903, 7.0),
    ("Washington, DC", 38.9072, -77.0369, 7.0),
    ("Boston, MA", 42.3601, -71.0589, 7.0),
    ("Nashville, TN", 36.1627, -86.7816, 6.0),
    ("Detroit, MI", 42.3314, -83.0458, 7.0),
    ("Portland, OR", 45.5152, -122.6784, 6.0),
    ("Las Vegas, NV", 36.1699, -115.1398, 6.0),
    ("Memphis, TN", 35.1495, -90.0490, 6.0),
    ("Louisville, KY", 38.2527, -85.7585, 6.0),
    ("Baltimore, MD", 39.2904, -76.6122, 6.0),
    ("Milwaukee, WI", 43.0389, -87.9065, 6.0),
    ("Albuquerque, NM", 35.0844, -106.6504, 5.0),
    ("Tucson, AZ", 32.2226, -110.9747, 5.0),
    ("Sacramento, CA", 38.5816, -121.4944, 5.0),
    ("Atlanta, GA", 33.7490, -84.3880, 4.0),
    ("Miami, FL", 25.7617, -80.1918, 4.0),
    ("Minneapolis, MN", 44.9778, -93.2650, 4.0),
    ("New Orleans, LA", 29.9511, -90.0715, 4.0),
    ("Pittsburgh, PA", 40.4406, -79.9959, 3.0),
    ("Salt Lake City, UT", 40.7608, -111.8910, 2.0),
    ("Anchorage, AK", 61.2181, -149.9003, 3.0),
    ("Honolulu, HI", 21.3069, -157.8583, 3.0),
    ("Burlington, VT", 44.4759, -73.2121, 1.0),
    ("Boise, ID", 43.6150, -116.2023, 2.0),
];

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn words_and_names_are_distinct() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let w = pseudo_words(500, &mut rng);
        let set: std::collections::HashSet<_> = w.iter().collect();
        assert_eq!(set.len(), 500);
        let names = person_names(2000, &mut rng);
        let set: std::collections::HashSet<_> = names.iter().map(|n| n.to_lowercase()).collect();
        assert_eq!(set.len(), 2000);
    }

    #[test]
    fn variants_keep_token_set() {
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let base = "Elena Kalomi";
        for v in [NameVariant::Same, NameVariant::Lowercase, NameVariant::MiddleInitial, NameVariant::Accented] {
            let out = name_variant(base, v, &mut rng);
            assert_eq!(crate::text::name_token_set(&out), crate::text::name_token_set(base));
        }
        assert_eq!(name_variant(base, NameVariant::Accented, &mut rng), "Eléna Kalomi");
    }
}
