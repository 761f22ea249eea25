from rest_framework import viewsets, status
from rest_framework.decorators import action
from rest_framework.response import Response
from drf_spectacular.utils import extend_schema, extend_schema_view, OpenApiParameter
from .models import TrainingRun
from .serializers import (
    TrainingRunSerializer, TrainingRunDetailSerializer, EpisodeRecordSerializer, ComparisonReportSerializer,
)
from .exceptions import MissingRunsError
from .utils.harness import compare
import logging

logger = logging.getLogger(__name__)


# --- TrainingRun ViewSet ---
@extend_schema_view(
    list=extend_schema(
        summary="List registered training runs",
        description="List runs registered by the train command, optionally filtered by algorithm or case.",
        parameters=[
            OpenApiParameter(name="algorithm", description="Filter by algorithm code", required=False, type=str,
                             enum=[code for code, _ in TrainingRun.ALGORITHM_CHOICES]),
            OpenApiParameter(name="case_id", description="Filter by initial condition", required=False, type=int,
                             enum=[1, 2, 3]),
        ],
        tags=['runs'],
    ),
    retrieve=extend_schema(
        summary="Retrieve a training run",
        description="Details of one run, including its stored config.",
        tags=['runs'],
    ),
)
class TrainingRunViewSet(viewsets.ReadOnlyModelViewSet):
    """
    Read-only access to registered runs, their learning curves and the
    comparison table across runs.
    """
    queryset = TrainingRun.objects.all()
    serializer_class = TrainingRunSerializer
    search_fields = ['name', 'algorithm']
    ordering_fields = ['id', 'created_at', 'test_return', 'max_training_return']

    def get_serializer_class(self):
        if self.action == 'retrieve':
            return TrainingRunDetailSerializer
        return super().get_serializer_class()

    def get_queryset(self):
        queryset = super().get_queryset()
        algorithm = self.request.query_params.get('algorithm')
        if algorithm:
            queryset = queryset.filter(algorithm=algorithm)
        case_id = self.request.query_params.get('case_id')
        if case_id:
            if not case_id.isdigit():
                return queryset.none()
            queryset = queryset.filter(case_id=int(case_id))
        return queryset

    @extend_schema(
        summary="Learning curve of a run",
        description="One record per training episode, in episode order.",
        responses=EpisodeRecordSerializer(many=True),
        tags=['runs'],
    )
    @action(detail=True, methods=['get'], pagination_class=None)
    def episodes(self, request, pk=None):
        run = self.get_object()
        serializer = EpisodeRecordSerializer(run.episode_records.order_by('episode'), many=True)
        return Response(serializer.data)

    @extend_schema(
        summary="Compare runs",
        description="Comparison table of maximum training return and deterministic test return per algorithm, "
                    "built from the runs' learning curves.",
        parameters=[OpenApiParameter(name="ids", description="Comma-separated run ids (at least two)",
                                     required=True, type=str)],
        responses=ComparisonReportSerializer,
        tags=['runs'],
    )
    @action(detail=False, methods=['get'], pagination_class=None)
    def compare(self, request):
        raw_ids = request.query_params.get('ids', '')
        try:
            ids = [int(part) for part in raw_ids.split(',') if part.strip()]
        except ValueError:
            return Response({"detail": "ids must be a comma-separated list of integers."},
                            status=status.HTTP_400_BAD_REQUEST)
        if len(ids) < 2:
            return Response({"detail": "At least two run ids are required."}, status=status.HTTP_400_BAD_REQUEST)

        runs = {run.id: run for run in TrainingRun.objects.filter(id__in=ids)}
        unknown = [i for i in ids if i not in runs]
        if unknown:
            return Response({"detail": "Unknown run ids.", "missing": unknown}, status=status.HTTP_404_NOT_FOUND)
        try:
            report = compare([runs[i].run_dir for i in ids])
        except MissingRunsError as e:
            logger.warning(f"Comparison failed, artifacts missing: {e.missing}")
            return Response({"detail": "Run artifacts are missing.", "missing": e.missing},
                            status=status.HTTP_404_NOT_FOUND)
        return Response(ComparisonReportSerializer(report.as_dict()).data)
