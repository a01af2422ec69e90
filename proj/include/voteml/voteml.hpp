#pragma once

#include "voteml/csv.hpp"
#include "voteml/ensemble.hpp"
#include "voteml/error.hpp"
#include "voteml/experiment.hpp"
#include "voteml/io.hpp"
#include "voteml/learners/classifier.hpp"
#include "voteml/learners/forest.hpp"
#include "voteml/learners/gbt.hpp"
#include "voteml/learners/linear_svm.hpp"
#include "voteml/learners/logistic.hpp"
#include "voteml/learners/mlp.hpp"
#include "voteml/learners/registry.hpp"
#include "voteml/learners/tree.hpp"
#include "voteml/matrix.hpp"
#include "voteml/metrics.hpp"
#include "voteml/pipeline.hpp"
#include "voteml/preprocess.hpp"
#include "voteml/random.hpp"
#include "voteml/smote.hpp"
#include "voteml/synthetic.hpp"
#include "voteml/table.hpp"
#include "voteml/training_control.hpp"
