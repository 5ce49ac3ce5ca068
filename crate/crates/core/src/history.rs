//! Asker history: what a question's author had done before asking.
//!
//! Timelines are built once from the full dump; a snapshot at time `t` only
//! looks at events strictly earlier than `t`.
//!
//! The dump records neither when an answer was accepted nor when votes were
//! cast. An answer therefore counts as accepted if any question lists it as
//! its accepted answer at dump time, timed by the answer's own post date, and
//! score sums use final scores.

use std::collections::{HashMap, HashSet};

use chrono::{DateTime, Utc};
use serde::{Deserialize, Serialize};

use crate::ingest::{BadgeAward, PostRow, PostType};

/// Dump badge names, in feature order.
pub const BADGES: [&str; 20] = [
    "Scholar",
    "Tumbleweed",
    "Informed",
    "Autobiographer",
    "Student",
    "Supporter",
    "Editor",
    "Commentator",
    "Teacher",
    "Analytical",
    "Popular Question",
    "Enthusiast",
    "Custodian",
    "Good Answer",
    "Famous Question",
    "Curious",
    "Nice Answer",
    "Yearling",
    "Necromancer",
    "Notable Question",
];

pub const USER_FEATURE_NAMES: [&str; 26] = [
    "membership_duration_days",
    "prior_answers",
    "prior_questions",
    "prior_accepted_answers",
    "prior_answers_score_sum",
    "prior_questions_score_sum",
    "badge_scholar",
    "badge_tumbleweed",
    "badge_informed",
    "badge_autobiographer",
    "badge_student",
    "badge_supporter",
    "badge_editor",
    "badge_commentator",
    "badge_teacher",
    "badge_analytical",
    "badge_popular_question",
    "badge_enthusiast",
    "badge_custodian",
    "badge_good_answer",
    "badge_famous_question",
    "badge_curious",
    "badge_nice_answer",
    "badge_yearling",
    "badge_necromancer",
    "badge_notable_question",
];

/// Index of a dump badge name in [`BADGES`]. Also accepts the snake_case
/// form (`popular_question`).
pub fn badge_index(name: &str) -> Option<usize> {
    BADGES.iter().position(|b| {
        b.eq_ignore_ascii_case(name) || b.to_lowercase().replace(' ', "_") == name
    })
}

/// The 26 asker features at one point in time.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct AskerSnapshot {
    pub membership_duration_days: f64,
    pub prior_questions: u64,
    pub prior_answers: u64,
    pub prior_accepted_answers: u64,
    pub prior_questions_score_sum: i64,
    pub prior_answers_score_sum: i64,
    pub scholar: bool,
    pub tumbleweed: bool,
    pub informed: bool,
    pub autobiographer: bool,
    pub student: bool,
    pub supporter: bool,
    pub editor: bool,
    pub commentator: bool,
    pub teacher: bool,
    pub analytical: bool,
    pub popular_question: bool,
    pub enthusiast: bool,
    pub custodian: bool,
    pub good_answer: bool,
    pub famous_question: bool,
    pub curious: bool,
    pub nice_answer: bool,
    pub yearling: bool,
    pub necromancer: bool,
    pub notable_question: bool,
}

impl AskerSnapshot {
    pub fn badges(&self) -> [bool; 20] {
        [
            self.scholar,
            self.tumbleweed,
            self.informed,
            self.autobiographer,
            self.student,
            self.supporter,
            self.editor,
            self.commentator,
            self.teacher,
            self.analytical,
            self.popular_question,
            self.enthusiast,
            self.custodian,
            self.good_answer,
            self.famous_question,
            self.curious,
            self.nice_answer,
            self.yearling,
            self.necromancer,
            self.notable_question,
        ]
    }

    pub fn set_badges(&mut self, flags: [bool; 20]) {
        let fields = [
            &mut self.scholar,
            &mut self.tumbleweed,
            &mut self.informed,
            &mut self.autobiographer,
            &mut self.student,
            &mut self.supporter,
            &mut self.editor,
            &mut self.commentator,
            &mut self.teacher,
            &mut self.analytical,
            &mut self.popular_question,
            &mut self.enthusiast,
            &mut self.custodian,
            &mut self.good_answer,
            &mut self.famous_question,
            &mut self.curious,
            &mut self.nice_answer,
            &mut self.yearling,
            &mut self.necromancer,
            &mut self.notable_question,
        ];
        for (field, flag) in fields.into_iter().zip(flags) {
            *field = flag;
        }
    }

    pub fn values(&self) -> [f64; 26] {
        let mut out = [0.0; 26];
        out[0] = self.membership_duration_days;
        out[1] = self.prior_answers as f64;
        out[2] = self.prior_questions as f64;
        out[3] = self.prior_accepted_answers as f64;
        out[4] = self.prior_answers_score_sum as f64;
        out[5] = self.prior_questions_score_sum as f64;
        for (slot, flag) in out[6..].iter_mut().zip(self.badges()) {
            *slot = if flag { 1.0 } else { 0.0 };
        }
        out
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord)]
pub struct AnswerEvent {
    pub time: DateTime<Utc>,
    pub score: i64,
    pub was_ever_accepted: bool,
}

/// A user's dated activity, each list ascending by time.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct UserTimeline {
    pub user_id: i64,
    pub questions: Vec<(DateTime<Utc>, i64)>,
    pub answers: Vec<AnswerEvent>,
    /// Every retained award as (time, index into [`BADGES`]).
    pub badges: Vec<(DateTime<Utc>, usize)>,
    question_score_prefix: Vec<i64>,
    answer_score_prefix: Vec<i64>,
    accepted_prefix: Vec<u64>,
    first_award: [Option<DateTime<Utc>>; 20],
}

impl UserTimeline {
    fn finish(&mut self) {
        self.questions.sort_unstable();
        self.answers.sort_unstable();
        self.badges.sort_unstable();
        self.question_score_prefix = prefix(self.questions.iter().map(|q| q.1));
        self.answer_score_prefix = prefix(self.answers.iter().map(|a| a.score));
        self.accepted_prefix = prefix(self.answers.iter().map(|a| u64::from(a.was_ever_accepted)));
        self.first_award = [None; 20];
        for &(time, badge) in &self.badges {
            self.first_award[badge].get_or_insert(time);
        }
    }

    /// Counters over events strictly before `t`.
    fn fill(&self, t: DateTime<Utc>, out: &mut AskerSnapshot) {
        let nq = self.questions.partition_point(|q| q.0 < t);
        let na = self.answers.partition_point(|a| a.time < t);
        out.prior_questions = nq as u64;
        out.prior_answers = na as u64;
        out.prior_questions_score_sum = self.question_score_prefix[nq];
        out.prior_answers_score_sum = self.answer_score_prefix[na];
        out.prior_accepted_answers = self.accepted_prefix[na];
        out.set_badges(self.first_award.map(|first| first.is_some_and(|at| at < t)));
    }
}

fn prefix<N: Copy + Default + std::ops::Add<Output = N>>(items: impl Iterator<Item = N>) -> Vec<N> {
    let mut out = vec![N::default()];
    let mut acc = N::default();
    for x in items {
        acc = acc + x;
        out.push(acc);
    }
    out
}

pub type Timelines = HashMap<i64, UserTimeline>;

/// Collects the ids named as accepted answers by any question.
pub fn accepted_answer_ids<'a>(posts: impl IntoIterator<Item = &'a PostRow>) -> HashSet<u64> {
    posts
        .into_iter()
        .filter(|p| p.post_type == PostType::Question)
        .filter_map(|p| p.accepted_answer_id)
        .collect()
}

pub fn build_timelines<'a>(
    posts: impl IntoIterator<Item = &'a PostRow>,
    badges: impl IntoIterator<Item = &'a BadgeAward>,
    accepted_ids: &HashSet<u64>,
) -> Timelines {
    let mut timelines: Timelines = HashMap::new();

    for post in posts {
        let Some(owner) = post.owner_user_id else {
            continue;
        };
        let timeline = timelines.entry(owner).or_insert_with(|| UserTimeline {
            user_id: owner,
            ..Default::default()
        });
        match post.post_type {
            PostType::Question => timeline.questions.push((post.creation_date, post.score)),
            PostType::Answer => timeline.answers.push(AnswerEvent {
                time: post.creation_date,
                score: post.score,
                was_ever_accepted: accepted_ids.contains(&post.id),
            }),
            PostType::Other(_) => {}
        }
    }
    for award in badges {
        let Some(badge) = BADGES.iter().position(|b| *b == award.badge_name) else {
            continue;
        };
        timelines
            .entry(award.user_id)
            .or_insert_with(|| UserTimeline {
                user_id: award.user_id,
                ..Default::default()
            })
            .badges
            .push((award.awarded_at, badge));
    }
    for timeline in timelines.values_mut() {
        timeline.finish();
    }
    timelines
}

/// Registration time per user id.
pub type Users = HashMap<i64, DateTime<Utc>>;

/// The asker's features at time `t`. The second value is false when the
/// user is absent from the user table; the snapshot is then all zero.
pub fn snapshot(
    user_id: Option<i64>,
    t: DateTime<Utc>,
    timelines: &Timelines,
    users: &Users,
) -> (AskerSnapshot, bool) {
    let mut out = AskerSnapshot::default();
    let Some(created) = user_id.and_then(|id| users.get(&id)) else {
        return (out, false);
    };
    let seconds = (t - *created).num_seconds().max(0);
    out.membership_duration_days = seconds as f64 / 86_400.0;
    if let Some(timeline) = user_id.and_then(|id| timelines.get(&id)) {
        timeline.fill(t, &mut out);
    }
    (out, true)
}
