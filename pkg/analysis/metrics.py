# Copyright 2020 Google LLC
#
# Licensed under the Apache License, Version 2.0 (the "License");
# you may not use this file except in compliance with the License.
# You may obtain a copy of the License at
#
#      http://www.apache.org/licenses/LICENSE-2.0
#
# Unless required by applicable law or agreed to in writing, software
# distributed under the License is distributed on an "AS IS" BASIS,
# WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
# See the License for the specific language governing permissions and
# limitations under the License.
"""Situation and answer accuracy metrics."""
import collections

import numpy as np

from common import logs
from geometry import frames
from geometry import rotations

LOCALIZATION_THRESHOLDS = (0.5, 1.0)
ORIENTATION_THRESHOLDS = (15.0, 30.0)

logger = logs.Logger('metrics')

MetricsReport = collections.namedtuple('MetricsReport', [
    'loc_acc',
    'rot_acc',
    'em1_overall',
    'em1_by_type',
    'em1_by_family',
    'counts',
])

AnswerAccuracy = collections.namedtuple(
    'AnswerAccuracy', ['overall', 'by_type', 'by_family', 'counts', 'unknown'])


class LengthMismatchError(ValueError):
    """Raised when predictions and ground truth differ in length."""


class UnknownAnswerError(ValueError):
    """Raised for a ground-truth answer outside the answer vocabulary."""


def _check_lengths(*sequences):
    lengths = {len(sequence) for sequence in sequences}
    if len(lengths) > 1:
        raise LengthMismatchError('Expected equal lengths, got %s.' %
                                  sorted(lengths))
    if not lengths or not lengths.pop():
        raise ValueError('Nothing to score.')


def localization_accuracy(predictions, ground_truths, threshold_m):
    """Fraction of situations predicted within |threshold_m| meters on the
    x-y plane."""
    _check_lengths(predictions, ground_truths)
    hits = [
        frames.horizontal_distance(prediction.position, truth.position) <=
        threshold_m
        for prediction, truth in zip(predictions, ground_truths)
    ]
    return float(np.mean(hits))


def orientation_accuracy(predictions, ground_truths, threshold_deg):
    """Fraction of situations whose yaw is within |threshold_deg| degrees."""
    _check_lengths(predictions, ground_truths)
    hits = [
        rotations.angular_error_deg(prediction.yaw, truth.yaw) <=
        threshold_deg
        for prediction, truth in zip(predictions, ground_truths)
    ]
    return float(np.mean(hits))


def _fractions(hits, keys):
    totals = collections.Counter(keys)
    correct = collections.Counter(key for key, hit in zip(keys, hits) if hit)
    return ({key: correct[key] / totals[key] for key in sorted(totals)},
            {key: totals[key] for key in sorted(totals)})


def em_at_1(logits, answers, question_types, answer_vocab, families=None,
            strict=False):
    """Exact match of the top-ranked answer, overall and per question type
    (and per family when |families| is given).

    Ground-truth answers missing from |answer_vocab| count as misses and are
    reported in AnswerAccuracy.unknown; with |strict| they raise
    UnknownAnswerError instead."""
    if families is None:
        families = [None] * len(answers)
    _check_lengths(logits, answers, question_types, families)
    hits = []
    unknown = []
    for index, (scores, answer) in enumerate(zip(logits, answers)):
        answer_id = answer_vocab.index(answer)
        if answer_id is None:
            if strict:
                raise UnknownAnswerError('Answer "%s" of item %d is not a '
                                         'candidate.' % (answer, index))
            unknown.append(index)
            hits.append(False)
            continue
        hits.append(int(np.argmax(scores)) == answer_id)
    if unknown:
        logger.warning('%d ground-truth answers are outside the answer '
                       'vocabulary.', len(unknown))

    by_type, type_counts = _fractions(hits, list(question_types))
    by_family, family_counts = {}, {}
    if any(family is not None for family in families):
        by_family, family_counts = _fractions(
            hits, [str(family) for family in families])
    counts = {
        'episodes': len(hits),
        'by_type': type_counts,
        'by_family': family_counts,
        'unknown_answers': len(unknown),
    }
    return AnswerAccuracy(float(np.mean(hits)), by_type, by_family, counts,
                          unknown)


def compute_report(predicted_situations,
                   true_situations,
                   logits,
                   answers,
                   question_types,
                   answer_vocab,
                   families=None,
                   localization_thresholds=LOCALIZATION_THRESHOLDS,
                   orientation_thresholds=ORIENTATION_THRESHOLDS):
    """Returns the MetricsReport of one evaluated split."""
    loc_acc = {
        float(threshold): localization_accuracy(predicted_situations,
                                                true_situations, threshold)
        for threshold in sorted(localization_thresholds)
    }
    rot_acc = {
        float(threshold): orientation_accuracy(predicted_situations,
                                               true_situations, threshold)
        for threshold in sorted(orientation_thresholds)
    }
    accuracy = em_at_1(logits, answers, question_types, answer_vocab,
                       families)
    return MetricsReport(loc_acc, rot_acc, accuracy.overall, accuracy.by_type,
                         accuracy.by_family, accuracy.counts)
