//! Synthetic corpus of PubMed-style XML notices.

use rand::rngs::StdRng;
use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};

/// Path of author names in [`pubmed_corpus`] documents.
pub const PUBMED_AUTHOR_NAME: &str = "PubmedArticle.MedlineCitation.Article.AuthorList.Author.Name";
pub const PUBMED_PMID: &str = "PubmedArticle.MedlineCitation.PMID";
pub const PUBMED_ARTICLE_ID: &str = "PubmedArticle.PubmedData.ArticleIdList.ArticleId";

/// One force rule on author names and two skip rules on identifiers.
pub fn pubmed_policy() -> String {
    format!("{PUBMED_AUTHOR_NAME} force Person\n{PUBMED_PMID} skip\n{PUBMED_ARTICLE_ID} skip\n")
}

#[derive(Debug, Clone)]
pub struct SyntheticDoc {
    pub name: String,
    pub xml: String,
}

const FIRST: &[&str] = &["Alice", "Bruno", "Chiara", "Dmitri", "Elena", "Farid", "Grace", "Hugo", "Ines", "Jonas"];
const LAST: &[&str] = &["Martin", "Rossi", "Novak", "Okafor", "Schmidt", "Dubois", "Tanaka", "Silva", "Weber", "Larsen"];
const ORGS: &[&str] = &[
    "ABCPharma",
    "HealthStar Inc",
    "Nordic Vaccine Institute",
    "Meridian Labs",
    "Curex Foundation",
];
const CITIES: &[&str] = &["Paris", "Lyon", "Berlin", "Oslo", "Madrid"];
const TOPICS: &[&str] = &["statin therapy", "insulin dosing", "vaccine uptake", "opioid prescribing", "antibiotic use"];

fn escape(s: &str) -> String {
    s.replace('&', "&amp;").replace('<', "&lt;").replace('>', "&gt;")
}

/// `n` notices with authors, affiliations, abstract, conflict-of-interest
/// statement and identifiers. Identical seeds give identical corpora.
pub fn pubmed_corpus(n: usize, seed: u64) -> Vec<SyntheticDoc> {
    let mut rng = StdRng::seed_from_u64(seed);
    (0..n)
        .map(|i| {
            let pmid = 30_000_000 + i;
            let topic = TOPICS.choose(&mut rng).unwrap();
            let org = ORGS.choose(&mut rng).unwrap();
            let city = CITIES.choose(&mut rng).unwrap();
            let mut authors = String::new();
            for _ in 0..rng.gen_range(1..=4) {
                let name = format!("{} {}", FIRST.choose(&mut rng).unwrap(), LAST.choose(&mut rng).unwrap());
                let aff = format!("Department of Medicine, {} University, {city}", LAST.choose(&mut rng).unwrap());
                authors.push_str(&format!(
                    "        <Author>\n          <Name>{}</Name>\n          <Affiliation>{}</Affiliation>\n        </Author>\n",
                    escape(&name),
                    escape(&aff)
                ));
            }
            let xml = format!(
                "<PubmedArticle>
  <MedlineCitation>
    <PMID>{pmid}</PMID>
    <Article>
      <ArticleTitle>Outcomes of {topic} in {city}</ArticleTitle>
      <Abstract>
        <AbstractText>We studied {topic} in a cohort recruited in {city}. Data were provided by {org}.</AbstractText>
      </Abstract>
      <AuthorList>
{authors}      </AuthorList>
    </Article>
    <CoiStatement>The authors received consulting fees from {org}.</CoiStatement>
  </MedlineCitation>
  <PubmedData>
    <ArticleIdList>
      <ArticleId IdType=\"pubmed\">{pmid}</ArticleId>
      <ArticleId IdType=\"doi\">10.5555/synth.{i:05}</ArticleId>
    </ArticleIdList>
  </PubmedData>
</PubmedArticle>
",
                org = escape(org),
            );
            SyntheticDoc {
                name: format!("pubmed_{i:05}.xml"),
                xml,
            }
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn deterministic_and_well_formed() {
        let a = pubmed_corpus(5, 9);
        let b = pubmed_corpus(5, 9);
        assert_eq!(a.len(), 5);
        for (x, y) in a.iter().zip(&b) {
            assert_eq!(x.xml, y.xml);
            let doc = roxmltree::Document::parse(&x.xml).unwrap();
            assert_eq!(doc.root_element().tag_name().name(), "PubmedArticle");
        }
    }
}
