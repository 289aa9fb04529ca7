//! License grants, the attribution registry, and the bundled agreement texts.

use std::collections::{BTreeMap, BTreeSet};

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};
use thiserror::Error;

use crate::model::{ReviewerConsent, ReviewerDecision, Timestamp};
use crate::workflow::{ArtifactKind, PartitionAssignment, PartitionLabel};

pub const LICENSE_ID: &str = "CC-BY-NC-SA-4.0";
pub const LICENSOR: &str = "Association for Computational Linguistics (ACL)";

pub const REVIEWER_AGREEMENT: &str = include_str!("../resources/reviewer_agreement.txt");
pub const AUTHOR_AGREEMENT: &str = include_str!("../resources/author_agreement.txt");
pub const REVIEWER_DISCLAIMER: &str = include_str!("../resources/reviewer_disclaimer.txt");
/// Legal code of the Creative Commons Attribution-NonCommercial-ShareAlike 4.0 license.
pub const LICENSE_TEXT: &str = include_str!("../resources/cc-by-nc-sa-4.0.txt");

const NOTICE_HEAD: &str = "Copyright © ";
const NOTICE_ADMIN: &str =
    " administered by the Association for Computational Linguistics (ACL) on behalf of ACL content contributors";
const NOTICE_NAMED_TAIL: &str = ", and other contributors who wish to remain anonymous.";
const NOTICE_ANON_TAIL: &str = " who wish to remain anonymous.";
const NOTICE_LICENSE: &str = " Content displayed on this webpage is made available under a Creative Commons Attribution-NonCommercial-ShareAlike 4.0 International License.";

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum LicensingError {
    #[error("attribution display name is empty")]
    EmptyName,
    #[error("display name {0:?} contains a comma or control character")]
    InvalidName(String),
    #[error("{kind:?} {artifact_id} was never donated (tier {tier})")]
    Tier { artifact_id: String, kind: ArtifactKind, tier: PartitionLabel },
    #[error("{artifact_id} is not a known artifact")]
    UnknownArtifact { artifact_id: String },
    #[error("{agreement:?} does not cover a {kind:?}")]
    AgreementMismatch { agreement: AgreementKind, kind: ArtifactKind },
    #[error("reviewer {reviewer_id} did not request attribution in {cycle_id}")]
    AttributionNotRequested { reviewer_id: String, cycle_id: String },
    #[error("not a copyright notice: {0}")]
    MalformedNotice(&'static str),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum AgreementKind {
    ReviewerAgreement,
    AuthorAgreement,
}

impl AgreementKind {
    pub fn for_artifact(kind: ArtifactKind) -> Self {
        match kind {
            ArtifactKind::Review => AgreementKind::ReviewerAgreement,
            ArtifactKind::Draft => AgreementKind::AuthorAgreement,
        }
    }

    pub fn text(self) -> &'static str {
        match self {
            AgreementKind::ReviewerAgreement => REVIEWER_AGREEMENT,
            AgreementKind::AuthorAgreement => AUTHOR_AGREEMENT,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum DisclaimerKind {
    Reviewer,
    Author,
}

/// Text shown to a principal before signing: the reviewer risk disclaimer or
/// the author agreement.
pub fn emit_disclaimer(kind: DisclaimerKind) -> &'static str {
    match kind {
        DisclaimerKind::Reviewer => REVIEWER_DISCLAIMER,
        DisclaimerKind::Author => AUTHOR_AGREEMENT,
    }
}

pub fn sha256_hex(bytes: &[u8]) -> String {
    hex::encode(Sha256::digest(bytes))
}

/// `(file name, SHA-256)` for each bundled agreement text.
pub fn resource_manifest() -> BTreeMap<String, String> {
    [
        ("author_agreement.txt", AUTHOR_AGREEMENT),
        ("reviewer_agreement.txt", REVIEWER_AGREEMENT),
        ("reviewer_disclaimer.txt", REVIEWER_DISCLAIMER),
    ]
    .into_iter()
    .map(|(name, text)| (name.to_owned(), sha256_hex(text.as_bytes())))
    .collect()
}

/// A reviewer who asked to be credited by name.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct AttributionEntry {
    pub principal_id: String,
    pub display_name: String,
    pub scope: BTreeSet<String>,
}

fn check_name(name: &str) -> Result<(), LicensingError> {
    if name.trim().is_empty() {
        return Err(LicensingError::EmptyName);
    }
    if name.contains(',') || name.chars().any(char::is_control) {
        return Err(LicensingError::InvalidName(name.to_owned()));
    }
    Ok(())
}

/// The only place display names are kept.
#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct AttributionRegistry {
    entries: BTreeMap<String, AttributionEntry>,
}

impl AttributionRegistry {
    pub fn new() -> Self {
        Self::default()
    }

    /// Adds `display_name` for the reviewer behind `consent`, extending the
    /// cycle scope if the reviewer is already registered.
    pub fn register(&mut self, consent: &ReviewerConsent, display_name: &str) -> Result<(), LicensingError> {
        if !(consent.attribution_requested && consent.decision == ReviewerDecision::Agree) {
            return Err(LicensingError::AttributionNotRequested {
                reviewer_id: consent.reviewer_id.clone(),
                cycle_id: consent.cycle_id.clone(),
            });
        }
        check_name(display_name)?;
        let entry = self.entries.entry(consent.reviewer_id.clone()).or_insert_with(|| AttributionEntry {
            principal_id: consent.reviewer_id.clone(),
            display_name: display_name.to_owned(),
            scope: BTreeSet::new(),
        });
        // A changed name only shows up in notices built after this point.
        entry.display_name = display_name.to_owned();
        entry.scope.insert(consent.cycle_id.clone());
        Ok(())
    }

    pub fn get(&self, principal_id: &str) -> Option<&AttributionEntry> {
        self.entries.get(principal_id)
    }

    pub fn entries(&self) -> impl Iterator<Item = &AttributionEntry> {
        self.entries.values()
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn display_names(&self) -> BTreeSet<&str> {
        self.entries.values().map(|e| e.display_name.as_str()).collect()
    }
}

/// Builds the collective copyright notice naming every attributed contributor.
///
/// Names are deduplicated and sorted, so the result does not depend on input order.
pub fn build_copyright_notice(year: i32, attributed: &[AttributionEntry]) -> Result<String, LicensingError> {
    let mut names = BTreeSet::new();
    for e in attributed {
        check_name(&e.display_name)?;
        names.insert(e.display_name.as_str());
    }
    let mut out = format!("{NOTICE_HEAD}{year}{NOTICE_ADMIN}");
    if names.is_empty() {
        out.push_str(NOTICE_ANON_TAIL);
    } else {
        out.push_str(": ");
        out.push_str(&names.into_iter().collect::<Vec<_>>().join(", "));
        out.push_str(NOTICE_NAMED_TAIL);
    }
    out.push_str(NOTICE_LICENSE);
    Ok(out)
}

/// Recovers `(year, names)` from a notice produced by [`build_copyright_notice`].
pub fn parse_copyright_notice(notice: &str) -> Result<(i32, Vec<String>), LicensingError> {
    let rest = notice.strip_prefix(NOTICE_HEAD).ok_or(LicensingError::MalformedNotice("prefix"))?;
    let (year, rest) = rest.split_once(NOTICE_ADMIN).ok_or(LicensingError::MalformedNotice("licensor"))?;
    let year: i32 = year.parse().map_err(|_| LicensingError::MalformedNotice("year"))?;
    let body = rest.strip_suffix(NOTICE_LICENSE).ok_or(LicensingError::MalformedNotice("license"))?;
    if body == NOTICE_ANON_TAIL {
        return Ok((year, Vec::new()));
    }
    let names = body
        .strip_prefix(": ")
        .and_then(|b| b.strip_suffix(NOTICE_NAMED_TAIL))
        .ok_or(LicensingError::MalformedNotice("contributors"))?;
    Ok((year, names.split(", ").map(str::to_owned).collect()))
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct LicenseGrant {
    pub artifact_id: String,
    pub kind: ArtifactKind,
    pub license_id: String,
    pub licensor: String,
    pub granted_at: Timestamp,
    pub agreement_kind: AgreementKind,
    /// SHA-256 of the agreement text the grant was made under.
    pub agreement_sha256: String,
    pub irrevocable: bool,
}

/// Grants keyed by artifact. Grants are never removed or replaced.
#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(from = "Vec<LicenseGrant>", into = "Vec<LicenseGrant>")]
pub struct GrantStore {
    grants: BTreeMap<(ArtifactKind, String), LicenseGrant>,
}

impl GrantStore {
    pub fn new() -> Self {
        Self::default()
    }

    /// Records the license for a donated artifact. A repeated call returns the
    /// original grant unchanged.
    pub fn record_grant(
        &mut self,
        assignments: &[PartitionAssignment],
        kind: ArtifactKind,
        artifact_id: &str,
        agreement_kind: AgreementKind,
        t: Timestamp,
    ) -> Result<&LicenseGrant, LicensingError> {
        let key = (kind, artifact_id.to_owned());
        if self.grants.contains_key(&key) {
            return Ok(&self.grants[&key]);
        }
        if AgreementKind::for_artifact(kind) != agreement_kind {
            return Err(LicensingError::AgreementMismatch { agreement: agreement_kind, kind });
        }
        let tier = assignments
            .iter()
            .find(|a| a.kind == kind && a.artifact_id == artifact_id)
            .map(|a| a.tier)
            .ok_or_else(|| LicensingError::UnknownArtifact { artifact_id: artifact_id.to_owned() })?;
        let donated = match kind {
            ArtifactKind::Review => tier.is_donated(),
            ArtifactKind::Draft => tier == PartitionLabel::Public3Y,
        };
        if !donated {
            return Err(LicensingError::Tier { artifact_id: artifact_id.to_owned(), kind, tier });
        }
        let grant = LicenseGrant {
            artifact_id: artifact_id.to_owned(),
            kind,
            license_id: LICENSE_ID.to_owned(),
            licensor: LICENSOR.to_owned(),
            granted_at: t,
            agreement_kind,
            agreement_sha256: sha256_hex(agreement_kind.text().as_bytes()),
            irrevocable: true,
        };
        Ok(self.grants.entry(key).or_insert(grant))
    }

    /// Records a grant for every donated artifact that does not have one yet.
    /// Returns the number of new grants.
    pub fn record_all(&mut self, assignments: &[PartitionAssignment], t: Timestamp) -> usize {
        let before = self.grants.len();
        for a in assignments {
            let eligible = match a.kind {
                ArtifactKind::Review => a.tier.is_donated(),
                ArtifactKind::Draft => a.tier == PartitionLabel::Public3Y,
            };
            if eligible {
                // Eligibility was just checked, so this cannot fail.
                let _ = self.record_grant(assignments, a.kind, &a.artifact_id, AgreementKind::for_artifact(a.kind), t);
            }
        }
        self.grants.len() - before
    }

    pub fn get(&self, kind: ArtifactKind, artifact_id: &str) -> Option<&LicenseGrant> {
        self.grants.get(&(kind, artifact_id.to_owned()))
    }

    pub fn len(&self) -> usize {
        self.grants.len()
    }

    pub fn is_empty(&self) -> bool {
        self.grants.is_empty()
    }

    pub fn iter(&self) -> impl Iterator<Item = &LicenseGrant> {
        self.grants.values()
    }
}

impl From<Vec<LicenseGrant>> for GrantStore {
    fn from(grants: Vec<LicenseGrant>) -> Self {
        let mut store = GrantStore::new();
        for g in grants {
            store.grants.entry((g.kind, g.artifact_id.clone())).or_insert(g);
        }
        store
    }
}

impl From<GrantStore> for Vec<LicenseGrant> {
    fn from(store: GrantStore) -> Self {
        store.grants.into_values().collect()
    }
}
