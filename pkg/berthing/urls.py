from django.urls import path, include
from rest_framework.routers import DefaultRouter
from .views import TrainingRunViewSet

router = DefaultRouter()
router.register(r'runs', TrainingRunViewSet, basename='run')

urlpatterns = [
    path('', include(router.urls)),
]
